#include "config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace instmvs::app {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const std::string& key, T& field) {
  try {
    field = j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + j.dump());
  }
}

using Setter = std::function<void(RunConfig&, const json&)>;

#define INSTMVS_KEY(name) \
  { #name, [](RunConfig& c, const json& v) { read(v, #name, c.name); } }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      INSTMVS_KEY(preset),          INSTMVS_KEY(scene_spec),  INSTMVS_KEY(scene),
      INSTMVS_KEY(out),             INSTMVS_KEY(seed),        INSTMVS_KEY(views),
      INSTMVS_KEY(stages),          INSTMVS_KEY(shrink),      INSTMVS_KEY(temperature),
      INSTMVS_KEY(window),          INSTMVS_KEY(argmax),      INSTMVS_KEY(ifads),
      INSTMVS_KEY(fiic),            INSTMVS_KEY(keep),        INSTMVS_KEY(iterations),
      INSTMVS_KEY(margin_frac),     INSTMVS_KEY(containment), INSTMVS_KEY(cpc),
      INSTMVS_KEY(delta),           INSTMVS_KEY(tau_c),       INSTMVS_KEY(reprojection_px),
      INSTMVS_KEY(relative_depth),  INSTMVS_KEY(min_views),   INSTMVS_KEY(dist_cap),
      INSTMVS_KEY(gt_stride),       INSTMVS_KEY(gt_bypass),   INSTMVS_KEY(variant),
      INSTMVS_KEY(csv),             INSTMVS_KEY(scenes),
  };
  return table;
}

#undef INSTMVS_KEY

}  // namespace

void apply_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, value);
  }
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg;
  apply_json(cfg, read_config_file(path));
  return cfg;
}

json to_json(const RunConfig& c) {
  return json{{"preset", c.preset},
              {"scene_spec", c.scene_spec},
              {"scene", c.scene},
              {"out", c.out},
              {"seed", c.seed},
              {"views", c.views},
              {"stages", c.stages},
              {"shrink", c.shrink},
              {"temperature", c.temperature},
              {"window", c.window},
              {"argmax", c.argmax},
              {"ifads", c.ifads},
              {"fiic", c.fiic},
              {"keep", c.keep},
              {"iterations", c.iterations},
              {"margin_frac", c.margin_frac},
              {"containment", c.containment},
              {"cpc", c.cpc},
              {"delta", c.delta},
              {"tau_c", c.tau_c},
              {"reprojection_px", c.reprojection_px},
              {"relative_depth", c.relative_depth},
              {"min_views", c.min_views},
              {"dist_cap", c.dist_cap},
              {"gt_stride", c.gt_stride},
              {"gt_bypass", c.gt_bypass},
              {"variant", c.variant},
              {"csv", c.csv},
              {"scenes", c.scenes}};
}

void validate(const RunConfig& c) {
  try {
    pipeline_options(c).stages.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("stages: ") + e.what());
  }
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.views >= 2, "views must be at least 2");
  require(c.keep > 0.0 && c.keep <= 1.0, "keep must lie in (0, 1]");
  require(c.iterations >= 1, "iterations must be at least 1");
  require(c.margin_frac >= 0.0, "margin_frac must be non-negative");
  require(c.containment > 0.0 && c.containment <= 1.0, "containment must lie in (0, 1]");
  require(c.tau_c >= 0.0 && c.tau_c <= 1.0, "tau_c must lie in [0, 1]");
  require(c.reprojection_px > 0.0, "reprojection_px must be positive");
  require(c.relative_depth > 0.0, "relative_depth must be positive");
  require(c.min_views >= 1, "min_views must be at least 1");
  require(c.dist_cap > 0.0, "dist_cap must be positive");
  require(c.gt_stride >= 1, "gt_stride must be at least 1");
}

std::string variant_label(const RunConfig& c) {
  if (!c.variant.empty()) return c.variant;
  std::string label;
  auto add = [&label](const char* part) {
    if (!label.empty()) label += '+';
    label += part;
  };
  if (c.ifads) add("ifads");
  if (c.ifads && c.fiic) add("fiic");
  if (c.cpc) add("cpc");
  return label.empty() ? "baseline" : label;
}

PipelineOptions pipeline_options(const RunConfig& c) {
  PipelineOptions o;
  o.stages.hypotheses = c.stages;
  o.stages.shrink = c.shrink;
  o.stages.temperature = c.temperature;
  o.stages.window = c.window;
  o.stages.argmax_regression = c.argmax;
  o.ifads = c.ifads;
  o.ifads_config.iterations = c.iterations;
  o.ifads_config.fiic = c.fiic;
  o.ifads_config.keep = c.keep;
  o.ifads_config.margin_frac = c.margin_frac;
  o.ifads_config.containment = c.containment;
  o.cpc = c.cpc;
  o.delta = c.delta;
  return o;
}

FusionConfig fusion_config(const RunConfig& c) {
  FusionConfig f;
  f.min_confidence = c.tau_c;
  f.reprojection_px = c.reprojection_px;
  f.relative_depth = c.relative_depth;
  f.min_views = c.min_views;
  return f;
}

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T value{};
    if (!(is >> value) || !(is >> std::ws).eof()) {
      throw ConfigError("cannot parse list entry '" + item + "' in '" + text + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) { return parse_list<int>(text); }
std::vector<double> parse_double_list(const std::string& text) {
  return parse_list<double>(text);
}

}  // namespace instmvs::app
