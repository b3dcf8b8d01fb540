#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "instmvs/fusion.hpp"
#include "instmvs/pipeline.hpp"
#include "instmvs/scene.hpp"

namespace instmvs::app {

// Exit codes of the command line tool.
enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kInternalError = 4 };

// Reads a JSON scene description (see README); textures come from `seed`.
SceneSpec load_scene_spec(const std::filesystem::path& path, uint64_t seed);

// Renders cfg.preset (or cfg.scene_spec) with cfg.views cameras into `out`.
void cmd_render(const RunConfig& cfg, const std::filesystem::path& out);

// Depth and confidence for the first cfg.views views of cfg.scene, written
// to cfg.out.
void cmd_depth(const RunConfig& cfg, std::ostream& log);

// Fuses the run in cfg.out (or the scene's ground truth with gt_bypass) into
// <out>/fused.ply.
void cmd_fuse(const RunConfig& cfg, std::ostream& log);

// Evaluates <out>/fused.ply against the scene's ground-truth cloud, writes
// metrics.txt and appends a CSV row.
CloudMetrics cmd_eval(const RunConfig& cfg, std::ostream& log);

// render -> depth -> fuse -> eval under <out>/scene and <out>/run.
CloudMetrics cmd_pipeline(const RunConfig& cfg, std::ostream& log);

// The four ablation variants on every scene of cfg.scenes (default: all
// presets). Writes <out>/ablation.csv and <out>/summary.txt. Returns the
// number of failed variants.
int cmd_ablate(const RunConfig& cfg, std::ostream& log);

// Writes <dir>/manifest.json: the config echo and the SHA-256 of every file
// under `dir`.
void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg);

std::string sha256_file(const std::filesystem::path& path);

// Entry point of the `instmvs` binary; returns the process exit code.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace instmvs::app
