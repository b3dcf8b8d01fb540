#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instmvs/fusion.hpp"
#include "instmvs/pipeline.hpp"

namespace instmvs::app {

// Bad configuration: unknown keys, wrong types, out-of-range values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat run configuration. Every key of the JSON config file maps to one field;
// see README for the key list.
struct RunConfig {
  std::string preset;       // preset name for render / pipeline / ablate
  std::string scene_spec;   // JSON scene description, alternative to preset
  std::string scene;        // rendered scene directory
  std::string out;          // output directory
  uint64_t seed = 0;
  int views = 5;

  std::vector<int> stages{64, 32, 16};
  std::vector<double> shrink{0.25, 0.25};
  double temperature = 0.1;
  int window = 7;
  bool argmax = false;

  bool ifads = false;
  bool fiic = false;
  double keep = 0.98;
  int iterations = 1;
  double margin_frac = 0.05;
  double containment = 0.9;

  bool cpc = false;
  double delta = 0.0;

  double tau_c = 0.3;
  double reprojection_px = 1.0;
  double relative_depth = 0.01;
  int min_views = 2;
  double dist_cap = 20.0;
  int gt_stride = 1;
  bool gt_bypass = false;

  std::string variant;  // empty: derived from the switches
  std::string csv;      // empty: <out>/metrics.csv
  std::vector<std::string> scenes;  // ablate: presets to run, default all
};

// Overwrites the fields named in `j`. Throws ConfigError naming the first
// unknown key or mistyped value.
void apply_json(RunConfig& cfg, const nlohmann::json& j);
// Parses the file; throws ConfigError when it is unreadable or not JSON.
nlohmann::json read_config_file(const std::filesystem::path& path);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

// Throws ConfigError when a value is out of range.
void validate(const RunConfig& cfg);

// "baseline", or the enabled switches joined by '+' ("ifads+fiic+cpc").
std::string variant_label(const RunConfig& cfg);

PipelineOptions pipeline_options(const RunConfig& cfg);
FusionConfig fusion_config(const RunConfig& cfg);

// Parses "64,32,16" style lists.
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace instmvs::app
