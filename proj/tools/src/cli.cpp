#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "app.hpp"
#include "instmvs/errors.hpp"

namespace instmvs::app {

namespace fs = std::filesystem;

namespace {

// Flag values; unset flags leave the config untouched.
struct Overrides {
  std::string config;
  std::optional<std::string> preset, scene, scene_spec, out, stages, shrink, variant, csv, scenes;
  std::optional<uint64_t> seed;
  std::optional<int> views, window, iterations, min_views, gt_stride;
  std::optional<double> temperature, keep, delta, tau_c, reprojection_px, relative_depth, dist_cap;
  std::optional<bool> ifads, fiic, cpc, argmax, gt_bypass;
};

void add_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file; flags override its keys");
  cmd->add_option("--preset", o.preset, "Preset scene name (plane-wall, shelf, orchard)");
  cmd->add_option("--scene", o.scene, "Rendered scene directory");
  cmd->add_option("--scene-spec", o.scene_spec, "JSON scene description to render");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Texture seed");
  cmd->add_option("--views", o.views, "Number of views");
  cmd->add_option("--stages", o.stages, "Hypotheses per stage, e.g. 64,32,16");
  cmd->add_option("--shrink", o.shrink, "Range factors between stages, e.g. 0.25,0.25");
  cmd->add_option("--temperature", o.temperature, "Softmax temperature");
  cmd->add_option("--window", o.window, "Matching window size");
  cmd->add_flag("--argmax,!--no-argmax", o.argmax, "Argmax instead of soft-argmax regression");
  cmd->add_flag("--ifads,!--no-ifads", o.ifads, "Instance-focused re-sampling");
  cmd->add_flag("--fiic,!--no-fiic", o.fiic, "Truncate instance depth ranges");
  cmd->add_option("--keep", o.keep, "Fraction of instance depths kept by truncation");
  cmd->add_option("--iterations", o.iterations, "Instance re-sampling iterations");
  cmd->add_flag("--cpc,!--no-cpc", o.cpc, "Conditional confidence");
  cmd->add_option("--delta", o.delta, "Half width of the final confidence interval (mm)");
  cmd->add_option("--tau-c", o.tau_c, "Confidence threshold for fusion");
  cmd->add_option("--reprojection-px", o.reprojection_px, "Fusion reprojection tolerance (px)");
  cmd->add_option("--relative-depth", o.relative_depth, "Fusion relative depth tolerance");
  cmd->add_option("--min-views", o.min_views, "Consistent views required per fused point");
  cmd->add_option("--dist-cap", o.dist_cap, "Distance cap of the cloud metrics (mm)");
  cmd->add_option("--gt-stride", o.gt_stride, "Stride of the ground-truth cloud");
  cmd->add_flag("--gt-bypass", o.gt_bypass, "Fuse ground-truth depth maps");
  cmd->add_option("--variant", o.variant, "Variant label for the metrics row");
  cmd->add_option("--csv", o.csv, "CSV table the metrics row is appended to");
  cmd->add_option("--scenes", o.scenes, "Comma separated presets to ablate");
}

template <typename T>
void set(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

// Defaults, then <out>/config.json when `inherit_run` is set and present,
// then --config, then flags.
RunConfig resolve(const Overrides& o, bool inherit_run) {
  RunConfig cfg;
  if (inherit_run && o.out) {
    const fs::path previous = fs::path(*o.out) / "config.json";
    if (fs::exists(previous)) cfg = load_config(previous);
  }
  if (!o.config.empty()) apply_json(cfg, read_config_file(o.config));
  set(o.preset, cfg.preset);
  set(o.scene, cfg.scene);
  set(o.scene_spec, cfg.scene_spec);
  set(o.out, cfg.out);
  set(o.seed, cfg.seed);
  set(o.views, cfg.views);
  if (o.stages) {
    cfg.stages = parse_int_list(*o.stages);
    if (!o.shrink && cfg.shrink.size() + 1 != cfg.stages.size()) {
      cfg.shrink.assign(cfg.stages.size() > 0 ? cfg.stages.size() - 1 : 0, 0.25);
    }
  }
  if (o.shrink) cfg.shrink = parse_double_list(*o.shrink);
  set(o.temperature, cfg.temperature);
  set(o.window, cfg.window);
  set(o.argmax, cfg.argmax);
  set(o.ifads, cfg.ifads);
  set(o.fiic, cfg.fiic);
  set(o.keep, cfg.keep);
  set(o.iterations, cfg.iterations);
  set(o.cpc, cfg.cpc);
  set(o.delta, cfg.delta);
  set(o.tau_c, cfg.tau_c);
  set(o.reprojection_px, cfg.reprojection_px);
  set(o.relative_depth, cfg.relative_depth);
  set(o.min_views, cfg.min_views);
  set(o.dist_cap, cfg.dist_cap);
  set(o.gt_stride, cfg.gt_stride);
  set(o.gt_bypass, cfg.gt_bypass);
  set(o.variant, cfg.variant);
  set(o.csv, cfg.csv);
  if (o.scenes) {
    cfg.scenes.clear();
    std::stringstream ss(*o.scenes);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) cfg.scenes.push_back(item);
    }
  }
  validate(cfg);
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Instance-focused multi-view depth estimation"};
  app.require_subcommand(1);
  Overrides o;
  std::function<int()> action;

  auto* render_cmd = app.add_subcommand("render", "Render a preset or scene description");
  add_options(render_cmd, o);
  render_cmd->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve(o, false);
      if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
      cmd_render(cfg, cfg.out);
      return static_cast<int>(kOk);
    };
  });

  auto* depth_cmd = app.add_subcommand("depth", "Estimate depth and confidence for a scene");
  add_options(depth_cmd, o);
  depth_cmd->callback([&] {
    action = [&] {
      cmd_depth(resolve(o, false), std::cerr);
      return static_cast<int>(kOk);
    };
  });

  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse the depth maps of a run into a point cloud");
  add_options(fuse_cmd, o);
  fuse_cmd->callback([&] {
    action = [&] {
      cmd_fuse(resolve(o, true), std::cerr);
      return static_cast<int>(kOk);
    };
  });

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a fused cloud against ground truth");
  add_options(eval_cmd, o);
  eval_cmd->callback([&] {
    action = [&] {
      cmd_eval(resolve(o, true), std::cout);
      return static_cast<int>(kOk);
    };
  });

  auto* pipeline_cmd = app.add_subcommand("pipeline", "render, depth, fuse and eval in one go");
  add_options(pipeline_cmd, o);
  pipeline_cmd->callback([&] {
    action = [&] {
      cmd_pipeline(resolve(o, false), std::cerr);
      return static_cast<int>(kOk);
    };
  });

  auto* ablate_cmd = app.add_subcommand("ablate", "Run the four ablation variants on presets");
  add_options(ablate_cmd, o);
  ablate_cmd->callback([&] {
    action = [&] {
      const int failed = cmd_ablate(resolve(o, false), std::cerr);
      return failed == 0 ? static_cast<int>(kOk) : static_cast<int>(kDataError);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    return action();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"instmvs"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace instmvs::app
