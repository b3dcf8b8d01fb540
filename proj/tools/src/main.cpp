#include "app.hpp"

int main(int argc, char** argv) { return instmvs::app::run_cli(argc, argv); }
