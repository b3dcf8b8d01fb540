#include "app.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "instmvs/errors.hpp"
#include "instmvs/raster_io.hpp"

namespace instmvs::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string view_name(size_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08zu", v);
  return buf;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Creates `dir` after checking that its parent exists.
void make_output_dir(const fs::path& dir) {
  const fs::path parent = fs::absolute(dir).parent_path();
  if (!fs::is_directory(parent)) {
    throw IoError("output parent directory " + parent.string() + " does not exist");
  }
  make_dirs(dir);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Rethrows with the view index prepended, keeping the error category.
template <typename F>
auto with_view_context(size_t view, F&& f) {
  const std::string ctx = "view " + std::to_string(view) + ": ";
  try {
    return f();
  } catch (const DataError& e) {
    throw DataError(ctx + e.what());
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }
}

// Lines that go both to the caller's stream and to the run's log.txt.
class RunLog {
 public:
  RunLog(std::ostream& echo, const fs::path& file, bool append)
      : echo_(echo), file_(open_out(file, append ? std::ios::app : std::ios::trunc)) {}

  void line(const std::string& text) {
    echo_ << text << '\n';
    file_ << text << '\n';
  }
  // Timings vary between runs and stay out of the file.
  void timing(const std::string& text) { echo_ << text << '\n'; }

 private:
  std::ostream& echo_;
  std::ofstream file_;
};

void write_config(const fs::path& dir, const RunConfig& cfg) {
  open_out(dir / "config.json") << to_json(cfg).dump(2) << '\n';
}

Image<float> confidence_image(const ConfidenceMap& m) {
  Image<float> img(m.rows, m.cols);
  for (size_t i = 0; i < m.size(); ++i) img[i] = static_cast<float>(m.values[i]);
  return img;
}

ConfidenceMap read_confidence(const fs::path& path) {
  const Image<float> img = read_pfm(path);
  ConfidenceMap m(img.rows(), img.cols());
  for (size_t i = 0; i < m.size(); ++i) m.values[i] = img[i];
  return m;
}

struct Scene {
  LoadedScene data;
  size_t count = 0;  // views in use
};

Scene load_scene(const RunConfig& cfg) {
  if (cfg.scene.empty()) throw ConfigError("no scene directory given (--scene)");
  Scene s;
  s.data = read_scene(cfg.scene);
  s.count = std::min(s.data.views.size(), static_cast<size_t>(cfg.views));
  if (s.count < 2) throw DataError(cfg.scene + ": at least two views are required");
  return s;
}

std::vector<CameraView> camera_views(const Scene& s) {
  std::vector<CameraView> out;
  for (size_t v = 0; v < s.count; ++v) out.push_back({s.data.views[v].image, s.data.views[v].camera});
  return out;
}

std::vector<CameraView> sources_for(const std::vector<CameraView>& views, size_t ref) {
  std::vector<CameraView> srcs;
  for (size_t v = 0; v < views.size(); ++v) {
    if (v != ref) srcs.push_back(views[v]);
  }
  return srcs;
}

// Per-run outputs of the depth step.
class DepthWriter {
 public:
  explicit DepthWriter(const fs::path& dir) : dir_(dir) {
    make_dirs(dir / "depth");
    make_dirs(dir / "confidence");
    report_ << "view stage hypotheses mean_max_prob median_max_prob mean_interval\n";
    report_.precision(8);
  }

  void write(size_t view, const ViewEstimate& est, bool select_conditional) {
    const std::string name = view_name(view);
    write_depth_pfm(dir_ / "depth" / (name + ".pfm"), est.depth);
    for (const StageRecord& s : est.stages) {
      write_depth_pfm(dir_ / "depth" / (name + "_s" + std::to_string(s.stage) + ".pfm"), s.depth);
    }
    write_pfm(dir_ / "confidence" / (name + "_mean.pfm"), confidence_image(est.baseline_confidence));
    const bool conditional = select_conditional && est.conditional;
    if (conditional) {
      write_pfm(dir_ / "confidence" / (name + "_cpc.pfm"), confidence_image(est.conditional->map));
    }
    write_pfm(dir_ / "confidence" / (name + ".pfm"),
              confidence_image(conditional ? est.conditional->map : est.baseline_confidence));
    if (est.ifads) {
      write_depth_pfm(dir_ / "depth" / (name + "_ifads.pfm"), est.ifads->depth);
      make_dirs(dir_ / "instances");
      std::ofstream log = open_out(dir_ / "instances" / (name + ".log"));
      log << "order=";
      for (size_t i = 0; i < est.ifads->hierarchy.order.size(); ++i) {
        log << (i ? "," : "") << est.ifads->hierarchy.order[i];
      }
      log << '\n';
      for (const auto& [parent, child] : est.ifads->hierarchy.edges) {
        log << "edge parent=" << parent << " child=" << child << '\n';
      }
      write_instance_log(log, est.ifads->log);
    }
    for (size_t k = 0; k < est.report.size(); ++k) {
      const StageSummary& s = est.report[k];
      report_ << view << ' ' << s.stage << ' ' << est.stages[k].volume.hypotheses.count() << ' '
              << s.mean_max_prob << ' ' << s.median_max_prob << ' ' << s.mean_interval << '\n';
    }
  }

  void finish() { open_out(dir_ / "stage_report.txt") << report_.str(); }

 private:
  fs::path dir_;
  std::ostringstream report_;
};

std::string describe(const ViewEstimate& est, bool conditional) {
  size_t valid = 0;
  for (uint8_t v : est.depth.valid) valid += v;
  std::ostringstream ss;
  ss << "stages=" << est.stages.size() << " valid=" << valid << '/' << est.depth.size();
  if (est.ifads) {
    size_t refined = 0;
    for (const InstanceStep& s : est.ifads->log) refined += s.refined;
    ss << " instances=" << est.ifads->hierarchy.order.size() << " refined=" << refined;
  }
  if (conditional && est.conditional) ss << " zero_mass=" << est.conditional->zero_mass;
  return ss.str();
}

PointCloud gt_cloud(const Scene& s, int stride) {
  std::vector<RenderedView> views;
  for (size_t v = 0; v < s.count; ++v) {
    const SceneView& sv = s.data.views[v];
    if (!sv.gt_depth) throw DataError("view " + std::to_string(v) + " has no ground-truth depth");
    RenderedView rv;
    rv.depth = *sv.gt_depth;
    rv.camera = sv.camera;
    views.push_back(std::move(rv));
  }
  return gt_point_cloud(views, stride);
}

const char* kCsvHeader = "scene,variant,accuracy,completeness,overall";

void append_csv(const fs::path& path, const std::string& row, const char* header) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out = open_out(path, std::ios::app);
  if (fresh) out << header << '\n';
  out << row << '\n';
}

Vec3 vec3(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw DataError("expected a 3-vector, got " + j.dump());
  return {v[0], v[1], v[2]};
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

void write_manifest(const fs::path& dir, const RunConfig& cfg) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir);
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json artifacts = json::array();
  for (const fs::path& rel : files) {
    artifacts.push_back({{"path", rel.generic_string()},
                         {"bytes", fs::file_size(dir / rel)},
                         {"sha256", sha256_file(dir / rel)}});
  }
  const json manifest{{"format", "instmvs-run-1"}, {"config", to_json(cfg)}, {"artifacts", artifacts}};
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

SceneSpec load_scene_spec(const fs::path& path, uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene description " + path.string());
  try {
    json j;
    in >> j;
    SceneSpec spec;
    spec.name = j.value("name", path.stem().string());
    if (j.contains("prior")) {
      const auto p = j.at("prior").get<std::vector<double>>();
      if (p.size() != 2) throw DataError("prior must be [lo, hi]");
      spec.prior = {p[0], p[1]};
    }
    spec.ambient = j.value("ambient", spec.ambient);
    if (j.contains("light")) spec.light = vec3(j.at("light"));
    if (j.contains("ring")) {
      const json& r = j.at("ring");
      spec.ring.radius = r.value("radius", spec.ring.radius);
      if (r.contains("look_at")) spec.ring.look_at = vec3(r.at("look_at"));
      spec.ring.step_deg = r.value("step_deg", spec.ring.step_deg);
      spec.ring.focal = r.value("focal", spec.ring.focal);
      spec.ring.width = r.value("width", spec.ring.width);
      spec.ring.height = r.value("height", spec.ring.height);
    }
    for (const json& pj : j.at("primitives")) {
      Primitive p;
      p.id = pj.at("id").get<int>();
      const std::string kind = pj.at("kind").get<std::string>();
      if (kind == "plane") {
        p.kind = PrimitiveKind::Plane;
        p.center = vec3(pj.at("center"));
        p.u = vec3(pj.at("u")).normalized();
        p.v = vec3(pj.at("v")).normalized();
        const auto half = pj.at("half").get<std::vector<double>>();
        if (half.size() != 2) throw DataError("plane half extents must be [w, h]");
        p.half = Vec3(half[0], half[1], 0.0);
      } else if (kind == "box") {
        p.kind = PrimitiveKind::Box;
        const Vec3 lo = vec3(pj.at("min"));
        const Vec3 hi = vec3(pj.at("max"));
        p.center = 0.5 * (lo + hi);
        p.half = 0.5 * (hi - lo);
      } else if (kind == "sphere") {
        p.kind = PrimitiveKind::Sphere;
        p.center = vec3(pj.at("center"));
        p.radius = pj.at("radius").get<double>();
      } else {
        throw DataError("unknown primitive kind '" + kind + "'");
      }
      p.texture = random_texture(seed, p.id);
      spec.primitives.push_back(std::move(p));
    }
    if (j.contains("groups")) {
      for (const json& g : j.at("groups")) {
        spec.groups.push_back({g.at("id").get<int>(), g.at("members").get<std::vector<int>>()});
      }
    }
    return spec;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void cmd_render(const RunConfig& cfg, const fs::path& out) {
  SceneSpec spec;
  if (!cfg.scene_spec.empty()) {
    spec = load_scene_spec(cfg.scene_spec, cfg.seed);
  } else {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), cfg.preset) == names.end()) {
      throw ConfigError("unknown preset '" + cfg.preset + "'");
    }
    spec = preset(cfg.preset, cfg.seed);
  }
  spec.ring.count = cfg.views;
  const std::vector<RenderedView> views = render(spec);
  write_scene(out, spec, cfg.seed, views);
  RunConfig echo = cfg;
  echo.out = out.string();
  write_manifest(out, echo);
}

void cmd_depth(const RunConfig& cfg, std::ostream& echo) {
  validate(cfg);
  if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
  const Scene scene = load_scene(cfg);
  make_output_dir(cfg.out);
  const fs::path dir = cfg.out;
  RunLog log(echo, dir / "log.txt", false);
  PipelineOptions opts = pipeline_options(cfg);

  log.line("depth scene=" + scene.data.name + " views=" + std::to_string(scene.count) +
           " variant=" + variant_label(cfg));
  if (opts.ifads) {
    bool any = false;
    for (size_t v = 0; v < scene.count; ++v) any = any || !scene.data.views[v].masks.empty();
    if (!any) {
      log.line("warning: IF-ADS enabled but the scene has no instance masks; running the baseline cascade");
      opts.ifads = false;
    }
  }

  const std::vector<CameraView> views = camera_views(scene);
  DepthWriter writer(dir);
  for (size_t v = 0; v < scene.count; ++v) {
    const auto t0 = std::chrono::steady_clock::now();
    const ViewEstimate est = with_view_context(v, [&] {
      return estimate_view(views[v], sources_for(views, v), scene.data.views[v].masks,
                           scene.data.prior, opts);
    });
    writer.write(v, est, opts.cpc);
    log.line("view " + std::to_string(v) + ' ' + describe(est, opts.cpc));
    log.timing("  " + format_metric(seconds_since(t0)) + " s");
  }
  writer.finish();
  write_config(dir, cfg);
  write_manifest(dir, cfg);
}

void cmd_fuse(const RunConfig& cfg, std::ostream& echo) {
  validate(cfg);
  if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
  const Scene scene = load_scene(cfg);
  make_output_dir(cfg.out);
  const fs::path dir = cfg.out;
  RunLog log(echo, dir / "log.txt", true);

  std::vector<DepthMap> depths;
  std::vector<ConfidenceMap> confs;
  std::vector<CameraModel> cams;
  std::vector<GrayImage> images;
  for (size_t v = 0; v < scene.count; ++v) {
    const SceneView& sv = scene.data.views[v];
    cams.push_back(sv.camera);
    images.push_back(sv.image);
    if (cfg.gt_bypass) {
      if (!sv.gt_depth) throw DataError("view " + std::to_string(v) + " has no ground-truth depth");
      depths.push_back(*sv.gt_depth);
    } else {
      const std::string name = view_name(v);
      depths.push_back(read_depth_pfm(dir / "depth" / (name + ".pfm")));
      confs.push_back(read_confidence(dir / "confidence" / (name + ".pfm")));
    }
  }
  const PointCloud cloud = fuse(depths, confs, cams, fusion_config(cfg), images);
  write_ply(dir / "fused.ply", cloud);
  log.line("fuse points=" + std::to_string(cloud.size()) +
           (cfg.gt_bypass ? " source=ground-truth" : " tau_c=" + format_metric(cfg.tau_c)));
  write_config(dir, cfg);
  write_manifest(dir, cfg);
}

CloudMetrics cmd_eval(const RunConfig& cfg, std::ostream& echo) {
  validate(cfg);
  if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
  const Scene scene = load_scene(cfg);
  const fs::path dir = cfg.out;
  const fs::path ply = dir / "fused.ply";
  const PointCloud pred = read_ply(ply);
  if (pred.empty()) {
    throw EmptyCloud(ply.string() + " is empty: no pixel passed the confidence threshold (tau_c=" +
                     format_metric(cfg.tau_c) + ") and the consistency checks");
  }
  const PointCloud gt = gt_cloud(scene, cfg.gt_stride);
  const CloudMetrics m = accuracy_completeness(pred, gt, cfg.dist_cap);
  const std::string variant = cfg.gt_bypass ? "gt-bypass" : variant_label(cfg);

  RunLog log(echo, dir / "log.txt", true);
  const std::string record = "scene=" + scene.data.name + " variant=" + variant +
                             " accuracy=" + format_metric(m.accuracy) +
                             " completeness=" + format_metric(m.completeness) +
                             " overall=" + format_metric(m.overall) +
                             " points=" + std::to_string(pred.size()) +
                             " gt_points=" + std::to_string(gt.size());
  open_out(dir / "metrics.txt") << record << '\n';
  log.line("eval " + record);
  const fs::path csv = cfg.csv.empty() ? dir / "metrics.csv" : fs::path(cfg.csv);
  append_csv(csv,
             scene.data.name + ',' + variant + ',' + format_metric(m.accuracy) + ',' +
                 format_metric(m.completeness) + ',' + format_metric(m.overall),
             kCsvHeader);
  write_manifest(dir, cfg);
  return m;
}

CloudMetrics cmd_pipeline(const RunConfig& cfg, std::ostream& echo) {
  validate(cfg);
  if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
  make_output_dir(cfg.out);
  RunConfig run = cfg;
  run.scene = (fs::path(cfg.out) / "scene").string();
  run.out = (fs::path(cfg.out) / "run").string();
  if (run.csv.empty()) run.csv = (fs::path(cfg.out) / "metrics.csv").string();
  cmd_render(run, run.scene);
  echo << "rendered " << run.scene << '\n';
  cmd_depth(run, echo);
  cmd_fuse(run, echo);
  return cmd_eval(run, echo);
}

int cmd_ablate(const RunConfig& cfg, std::ostream& echo) {
  validate(cfg);
  if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
  const std::vector<std::string> scenes = cfg.scenes.empty() ? preset_names() : cfg.scenes;
  const auto names = preset_names();
  for (const std::string& s : scenes) {
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      throw ConfigError("unknown preset '" + s + "'");
    }
  }
  make_output_dir(cfg.out);
  const fs::path root = cfg.out;

  struct Variant {
    RunConfig cfg;
    std::string label;
    std::string error;
    std::optional<CloudMetrics> metrics;
  };
  auto make_variant = [&cfg](bool ifads, bool fiic, bool cpc) {
    Variant v;
    v.cfg = cfg;
    v.cfg.variant.clear();
    v.cfg.ifads = ifads;
    v.cfg.fiic = fiic;
    v.cfg.cpc = cpc;
    v.label = variant_label(v.cfg);
    v.cfg.variant = v.label;
    return v;
  };

  std::ostringstream rows;
  std::ostringstream summary;
  int failures = 0;
  for (const std::string& scene_name : scenes) {
    const fs::path scene_dir = root / scene_name;
    make_dirs(scene_dir);
    std::vector<Variant> variants{make_variant(false, false, false), make_variant(true, false, false),
                                  make_variant(true, true, false), make_variant(true, true, true)};
    RunConfig render_cfg = cfg;
    render_cfg.preset = scene_name;
    render_cfg.scene_spec.clear();
    cmd_render(render_cfg, scene_dir / "scene");
    for (Variant& v : variants) {
      v.cfg.preset = scene_name;
      v.cfg.scene = (scene_dir / "scene").string();
      v.cfg.out = (scene_dir / v.label).string();
      v.cfg.csv = (scene_dir / v.label / "metrics.csv").string();
      make_dirs(v.cfg.out);
    }
    const Scene scene = load_scene(variants[0].cfg);
    const std::vector<CameraView> views = camera_views(scene);
    echo << "ablate scene=" << scene_name << " views=" << scene.count << '\n';

    std::vector<std::unique_ptr<DepthWriter>> writers;
    std::vector<std::unique_ptr<RunLog>> logs;
    for (Variant& v : variants) {
      writers.push_back(std::make_unique<DepthWriter>(v.cfg.out));
      logs.push_back(std::make_unique<RunLog>(echo, fs::path(v.cfg.out) / "log.txt", false));
      logs.back()->line("depth scene=" + scene.data.name + " views=" + std::to_string(scene.count) +
                        " variant=" + v.label);
    }

    // The first stage is shared by every variant; +all reuses the
    // +IF-ADS+FIIC estimate with conditional confidence selected.
    for (size_t view = 0; view < scene.count; ++view) {
      const std::vector<CameraView> srcs = sources_for(views, view);
      const auto& masks = scene.data.views[view].masks;
      std::optional<StageRecord> initial;
      try {
        initial = with_view_context(view, [&] {
          return initial_stage(views[view], srcs, scene.data.prior, pipeline_options(cfg).stages);
        });
      } catch (const std::exception& e) {
        for (Variant& v : variants) {
          if (v.error.empty()) v.error = e.what();
        }
        continue;
      }
      for (size_t k = 0; k < 3; ++k) {
        if (!variants[k].error.empty()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        PipelineOptions opts = pipeline_options(variants[k].cfg);
        opts.cpc = k == 2;
        try {
          const ViewEstimate est = with_view_context(view, [&] {
            return estimate_from_initial(views[view], srcs, masks, scene.data.prior, opts, *initial);
          });
          writers[k]->write(view, est, false);
          logs[k]->line("view " + std::to_string(view) + ' ' + describe(est, false));
          if (k == 2) {
            writers[3]->write(view, est, true);
            logs[3]->line("view " + std::to_string(view) + ' ' + describe(est, true));
          }
          logs[k]->timing("  " + variants[k].label + ' ' + format_metric(seconds_since(t0)) + " s");
        } catch (const std::exception& e) {
          variants[k].error = e.what();
          if (k == 2) variants[3].error = e.what();
        }
      }
    }

    for (size_t k = 0; k < variants.size(); ++k) {
      Variant& v = variants[k];
      writers[k]->finish();
      logs[k].reset();
      if (v.error.empty()) {
        try {
          write_config(v.cfg.out, v.cfg);
          cmd_fuse(v.cfg, echo);
          v.metrics = cmd_eval(v.cfg, echo);
        } catch (const std::exception& e) {
          v.error = e.what();
        }
      }
      if (!v.error.empty()) {
        ++failures;
        echo << "variant " << v.label << " failed: " << v.error << '\n';
        open_out(fs::path(v.cfg.out) / "log.txt", std::ios::app) << "failed: " << v.error << '\n';
        write_manifest(v.cfg.out, v.cfg);
      }
      std::string status = v.error.empty() ? "ok" : "failed: " + v.error;
      std::replace(status.begin(), status.end(), ',', ';');
      std::replace(status.begin(), status.end(), '\n', ' ');
      rows << scene_name << ',' << v.label << ',';
      if (v.metrics) {
        rows << format_metric(v.metrics->accuracy) << ',' << format_metric(v.metrics->completeness)
             << ',' << format_metric(v.metrics->overall);
      } else {
        rows << ",,";
      }
      rows << ',' << status << '\n';
    }

    summary << scene_name << '\n';
    const Variant& base = variants[0];
    for (size_t k = 1; k < variants.size(); ++k) {
      const Variant& v = variants[k];
      summary << "  " << v.label << " vs baseline:";
      if (!base.metrics || !v.metrics) {
        summary << " n/a\n";
        continue;
      }
      auto delta = [&summary](const char* name, double b, double x) {
        summary << ' ' << name << ' ' << (x - b >= 0 ? "+" : "") << format_metric(x - b);
        if (b > 0.0) summary << " (" << (x >= b ? "+" : "") << format_metric(100.0 * (x - b) / b) << "%)";
      };
      delta("accuracy", base.metrics->accuracy, v.metrics->accuracy);
      delta("completeness", base.metrics->completeness, v.metrics->completeness);
      delta("overall", base.metrics->overall, v.metrics->overall);
      summary << '\n';
    }
  }

  open_out(root / "ablation.csv") << kCsvHeader << ",status\n" << rows.str();
  open_out(root / "summary.txt") << summary.str();
  echo << summary.str();
  write_manifest(root, cfg);
  return failures;
}

}  // namespace instmvs::app
