#include "instmvs/scene.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "instmvs/errors.hpp"
#include "instmvs/raster_io.hpp"

namespace instmvs {

namespace fs = std::filesystem;
using json = nlohmann::json;

double Texture::reflectance(const Vec3& local) const {
  double r = base;
  for (const Wave& w : waves) r += w.amplitude * std::sin(w.k.dot(local) + w.phase);
  return r;
}

Texture random_texture(uint64_t seed, int id) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(id)};
  std::mt19937_64 rng(seq);
  // Raw engine bits keep the draw identical across standard libraries.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  constexpr double kWavelengths[] = {64.0, 44.0, 31.0, 22.0, 16.0};
  constexpr double kWeights[] = {1.0, 0.8, 0.6, 0.45, 0.3};
  constexpr double kTotalAmplitude = 0.32;
  double weight_sum = 0.0;
  for (double w : kWeights) weight_sum += w;

  Texture t;
  t.base = 0.5;
  for (int i = 0; i < 5; ++i) {
    const double z = 2.0 * unit() - 1.0;
    const double phi = 2.0 * std::numbers::pi * unit();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 dir(s * std::cos(phi), s * std::sin(phi), z);
    const double scale = 2.0 * std::numbers::pi / (kWavelengths[i] * (0.9 + 0.2 * unit()));
    t.waves.push_back({dir * scale, kTotalAmplitude * kWeights[i] / weight_sum,
                       2.0 * std::numbers::pi * unit()});
  }
  return t;
}

void validate(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw DegenerateSpec("scene has no primitives");
  if (!(spec.prior.lo > 0.0 && spec.prior.lo < spec.prior.hi)) {
    throw DegenerateSpec("depth prior must satisfy 0 < lo < hi");
  }
  std::set<int> ids;
  for (const Primitive& p : spec.primitives) {
    if (p.id <= 0 || p.id > 65535) throw DegenerateSpec("primitive ids must be in 1..65535");
    if (!ids.insert(p.id).second) throw DegenerateSpec("duplicate instance id " + std::to_string(p.id));
    if (!p.center.allFinite()) throw DegenerateSpec("primitive " + std::to_string(p.id) + " is not finite");
    switch (p.kind) {
      case PrimitiveKind::Plane:
        if (std::abs(p.u.norm() - 1.0) > 1e-9 || std::abs(p.v.norm() - 1.0) > 1e-9 ||
            std::abs(p.u.dot(p.v)) > 1e-9 || !(p.half.x() > 0.0 && p.half.y() > 0.0)) {
          throw DegenerateSpec("plane " + std::to_string(p.id) + " needs orthonormal axes and extents");
        }
        break;
      case PrimitiveKind::Sphere:
        if (!(p.radius > 0.0)) throw DegenerateSpec("sphere " + std::to_string(p.id) + " needs a radius");
        break;
      case PrimitiveKind::Box:
        if (!(p.half.minCoeff() > 0.0)) {
          throw DegenerateSpec("box " + std::to_string(p.id) + " needs positive extents");
        }
        break;
    }
  }
  for (const InstanceGroup& g : spec.groups) {
    if (g.id <= 0 || !ids.insert(g.id).second) {
      throw DegenerateSpec("group id " + std::to_string(g.id) + " is zero or already used");
    }
    if (g.members.empty()) throw DegenerateSpec("group " + std::to_string(g.id) + " is empty");
    for (int m : g.members) {
      const bool known = std::any_of(spec.primitives.begin(), spec.primitives.end(),
                                     [m](const Primitive& p) { return p.id == m; });
      if (!known) throw DegenerateSpec("group " + std::to_string(g.id) + " names unknown id " + std::to_string(m));
    }
  }
  const CameraRing& r = spec.ring;
  if (r.count < 1 || !(r.radius > 0.0) || !(r.focal > 0.0) || r.width < 2 || r.height < 2) {
    throw DegenerateSpec("camera ring is malformed");
  }
}

std::vector<CameraModel> ring_cameras(const CameraRing& ring) {
  Mat3 k = Mat3::Identity();
  k(0, 0) = k(1, 1) = ring.focal;
  k(0, 2) = 0.5 * (ring.width - 1);
  k(1, 2) = 0.5 * (ring.height - 1);
  std::vector<CameraModel> cams;
  for (int i = 0; i < ring.count; ++i) {
    const int step = (i + 1) / 2;
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;
    const double theta = sign * step * ring.step_deg * std::numbers::pi / 180.0;
    const Vec3 center = ring.look_at + ring.radius * Vec3(std::sin(theta), 0.0, -std::cos(theta));
    const Vec3 z = (ring.look_at - center).normalized();
    const Vec3 x = Vec3::UnitY().cross(z).normalized();
    const Vec3 y = z.cross(x);
    Mat3 rot;
    rot.row(0) = x;
    rot.row(1) = y;
    rot.row(2) = z;
    cams.emplace_back(k, rot, -rot * center, ring.width, ring.height);
  }
  return cams;
}

namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Vec3 normal = Vec3::Zero();
};

bool intersect(const Primitive& p, const Vec3& o, const Vec3& d, Hit& hit) {
  constexpr double kMinT = 1e-9;
  switch (p.kind) {
    case PrimitiveKind::Plane: {
      const Vec3 n = p.u.cross(p.v);
      const double denom = n.dot(d);
      if (std::abs(denom) < 1e-15) return false;
      const double t = n.dot(p.center - o) / denom;
      if (t <= kMinT) return false;
      const Vec3 q = o + t * d - p.center;
      if (std::abs(q.dot(p.u)) > p.half.x() || std::abs(q.dot(p.v)) > p.half.y()) return false;
      hit = {t, n};
      return true;
    }
    case PrimitiveKind::Sphere: {
      const Vec3 oc = o - p.center;
      const double a = d.squaredNorm();
      const double b = oc.dot(d);
      const double c = oc.squaredNorm() - p.radius * p.radius;
      const double disc = b * b - a * c;
      if (disc < 0.0) return false;
      const double sq = std::sqrt(disc);
      // Stable quadratic roots.
      const double qq = -(b + std::copysign(sq, b));
      double t0 = qq / a;
      double t1 = c / qq;
      if (t0 > t1) std::swap(t0, t1);
      const double t = t0 > kMinT ? t0 : t1;
      if (t <= kMinT) return false;
      hit = {t, (o + t * d - p.center) / p.radius};
      return true;
    }
    case PrimitiveKind::Box: {
      double t_near = -std::numeric_limits<double>::infinity();
      double t_far = std::numeric_limits<double>::infinity();
      int axis = -1;
      for (int a = 0; a < 3; ++a) {
        const double lo = p.center[a] - p.half[a];
        const double hi = p.center[a] + p.half[a];
        if (std::abs(d[a]) < 1e-15) {
          if (o[a] < lo || o[a] > hi) return false;
          continue;
        }
        double ta = (lo - o[a]) / d[a];
        double tb = (hi - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        if (ta > t_near) {
          t_near = ta;
          axis = a;
        }
        t_far = std::min(t_far, tb);
      }
      if (axis < 0 || t_near > t_far || t_near <= kMinT) return false;
      Vec3 n = Vec3::Zero();
      n[axis] = 1.0;
      hit = {t_near, n};
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<RenderedView> render(const SceneSpec& spec) {
  validate(spec);
  const Vec3 to_light = -spec.light.normalized();
  std::vector<RenderedView> views;
  std::set<int> seen;
  for (const CameraModel& cam : ring_cameras(spec.ring)) {
    const int rows = cam.height();
    const int cols = cam.width();
    RenderedView view{GrayImage(rows, cols), DepthMap(rows, cols), LabelImage(rows, cols), cam};
    const Mat3 k_inv = cam.intrinsics().inverse();
    const Mat3 r_t = cam.rotation().transpose();
    const Vec3 origin = cam.center();
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const Vec3 ray_cam = k_inv * Vec3(c, r, 1.0);
        const Vec3 dir = r_t * ray_cam;
        Hit best;
        const Primitive* hit_prim = nullptr;
        for (const Primitive& p : spec.primitives) {
          Hit h;
          if (intersect(p, origin, dir, h) && h.t < best.t) {
            best = h;
            hit_prim = &p;
          }
        }
        if (!hit_prim) continue;
        const size_t i = view.depth.index(r, c);
        const double depth = best.t * ray_cam.z();
        if (depth < spec.prior.lo || depth > spec.prior.hi) {
          std::ostringstream msg;
          msg << "instance " << hit_prim->id << " is seen at depth " << depth
              << " mm, outside the prior [" << spec.prior.lo << ", " << spec.prior.hi << "]";
          throw DegenerateSpec(msg.str());
        }
        const Vec3 point = origin + best.t * dir;
        Vec3 n = best.normal;
        if (n.dot(dir) > 0.0) n = -n;
        const double shade = spec.ambient + (1.0 - spec.ambient) * std::max(0.0, n.dot(to_light));
        const double value = 255.0 * hit_prim->texture.reflectance(point - hit_prim->center) * shade;
        view.image[i] = static_cast<float>(std::clamp(std::round(value), 0.0, 255.0));
        view.depth.depth[i] = depth;
        view.depth.valid[i] = 1;
        view.labels[i] = static_cast<uint16_t>(hit_prim->id);
        seen.insert(hit_prim->id);
      }
    }
    views.push_back(std::move(view));
  }
  if (seen.empty()) throw DegenerateSpec("scene '" + spec.name + "' has no visible primitive");
  for (const Primitive& p : spec.primitives) {
    if (!seen.count(p.id)) {
      throw DegenerateSpec("instance " + std::to_string(p.id) + " is outside every camera frustum");
    }
  }
  return views;
}

std::vector<InstanceMask> view_masks(const SceneSpec& spec, const RenderedView& view) {
  const int rows = view.labels.rows();
  const int cols = view.labels.cols();
  std::vector<BinaryImage> rasters;
  std::vector<int> ids;
  auto add = [&](int id, const std::vector<int>& members) {
    BinaryImage raster(rows, cols);
    bool any = false;
    for (size_t i = 0; i < raster.size(); ++i) {
      const int label = view.labels[i];
      if (std::find(members.begin(), members.end(), label) != members.end()) {
        raster[i] = 1;
        any = true;
      }
    }
    if (!any) return;
    rasters.push_back(std::move(raster));
    ids.push_back(id);
  };
  for (const Primitive& p : spec.primitives) add(p.id, {p.id});
  for (const InstanceGroup& g : spec.groups) add(g.id, g.members);
  return load_masks(rasters, rows, cols, ids);
}

PointCloud gt_point_cloud(std::span<const RenderedView> views, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  PointCloud cloud;
  for (size_t v = 0; v < views.size(); ++v) {
    const DepthMap& d = views[v].depth;
    size_t hit = 0;
    for (int r = 0; r < d.rows; ++r) {
      for (int c = 0; c < d.cols; ++c) {
        const size_t i = d.index(r, c);
        if (!d.valid[i]) continue;
        if (hit++ % static_cast<size_t>(stride) != 0) continue;
        cloud.points.push_back(backproject({double(r), double(c)}, d.depth[i], views[v].camera));
        cloud.views.push_back(static_cast<int>(v));
      }
    }
  }
  return cloud;
}

std::vector<std::string> preset_names() { return {"plane-wall", "shelf", "orchard"}; }

namespace {

Primitive plane(int id, const Vec3& center, double yaw_deg, double pitch_deg, double half_w,
                double half_h) {
  const double yaw = yaw_deg * std::numbers::pi / 180.0;
  const double pitch = pitch_deg * std::numbers::pi / 180.0;
  Primitive p;
  p.kind = PrimitiveKind::Plane;
  p.id = id;
  p.center = center;
  p.u = Vec3(std::cos(yaw), 0.0, std::sin(yaw));
  const Vec3 v0 = Vec3(0.0, std::cos(pitch), std::sin(pitch));
  p.v = (v0 - v0.dot(p.u) * p.u).normalized();
  p.half = Vec3(half_w, half_h, 0.0);
  return p;
}

Primitive box(int id, const Vec3& lo, const Vec3& hi) {
  Primitive p;
  p.kind = PrimitiveKind::Box;
  p.id = id;
  p.center = 0.5 * (lo + hi);
  p.half = 0.5 * (hi - lo);
  return p;
}

Primitive sphere(int id, const Vec3& center, double radius) {
  Primitive p;
  p.kind = PrimitiveKind::Sphere;
  p.id = id;
  p.center = center;
  p.radius = radius;
  return p;
}

}  // namespace

SceneSpec preset(const std::string& name, uint64_t seed) {
  SceneSpec s;
  s.name = name;
  if (name == "plane-wall") {
    s.primitives.push_back(plane(1, {0.0, 0.0, 670.0}, 18.0, 6.0, 480.0, 330.0));
  } else if (name == "shelf") {
    // y points down: the stacked box rests on top of box 3.
    s.primitives.push_back(plane(1, {0.0, 0.0, 820.0}, 0.0, 0.0, 460.0, 320.0));
    s.primitives.push_back(box(2, {-230.0, -30.0, 560.0}, {-110.0, 90.0, 650.0}));
    s.primitives.push_back(box(3, {-50.0, 10.0, 640.0}, {70.0, 110.0, 730.0}));
    s.primitives.push_back(box(4, {120.0, -40.0, 720.0}, {240.0, 80.0, 790.0}));
    s.primitives.push_back(box(5, {-25.0, -60.0, 660.0}, {45.0, 10.0, 710.0}));
    s.groups.push_back({6, {3, 5}});
  } else if (name == "orchard") {
    s.primitives.push_back(plane(1, {0.0, 0.0, 815.0}, -6.0, 0.0, 460.0, 320.0));
    s.primitives.push_back(sphere(2, {-70.0, 10.0, 590.0}, 80.0));
    // Partly hidden behind the sphere in the central view.
    s.primitives.push_back(box(3, {-10.0, -50.0, 660.0}, {130.0, 90.0, 760.0}));
  } else {
    throw DegenerateSpec("unknown preset '" + name + "'");
  }
  for (Primitive& p : s.primitives) p.texture = random_texture(seed, p.id);
  return s;
}

SpanReport depth_spans(const SceneSpec& spec, std::span<const RenderedView> views) {
  const double inf = std::numeric_limits<double>::infinity();
  std::map<int, Interval> by_label;
  SpanReport report{{inf, -inf}, {}};
  for (const RenderedView& v : views) {
    for (size_t i = 0; i < v.depth.size(); ++i) {
      if (!v.depth.valid[i]) continue;
      const double d = v.depth.depth[i];
      auto [it, fresh] = by_label.try_emplace(v.labels[i], Interval{d, d});
      it->second = {std::min(it->second.lo, d), std::max(it->second.hi, d)};
      report.scene = {std::min(report.scene.lo, d), std::max(report.scene.hi, d)};
    }
  }
  for (const Primitive& p : spec.primitives) {
    if (auto it = by_label.find(p.id); it != by_label.end()) report.instances.emplace_back(p.id, it->second);
  }
  for (const InstanceGroup& g : spec.groups) {
    Interval span{inf, -inf};
    for (int m : g.members) {
      if (auto it = by_label.find(m); it != by_label.end()) {
        span = {std::min(span.lo, it->second.lo), std::max(span.hi, it->second.hi)};
      }
    }
    if (span.lo <= span.hi) report.instances.emplace_back(g.id, span);
  }
  return report;
}

namespace {

std::string view_name(size_t v) {
  std::ostringstream ss;
  ss << std::setw(8) << std::setfill('0') << v;
  return ss.str();
}

const char* kind_name(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Plane: return "plane";
    case PrimitiveKind::Sphere: return "sphere";
    case PrimitiveKind::Box: return "box";
  }
  return "?";
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void write_scene(const fs::path& dir, const SceneSpec& spec, uint64_t seed,
                 std::span<const RenderedView> views) {
  const fs::path parent = fs::absolute(dir).parent_path();
  if (!fs::is_directory(parent)) throw IoError("output parent directory " + parent.string() + " does not exist");
  for (const char* sub : {"images", "cams", "depth_gt", "labels", "masks"}) make_dir(dir / sub);

  const double interval = (spec.prior.hi - spec.prior.lo) / 63.0;
  json manifest;
  manifest["format"] = "instmvs-scene-1";
  manifest["name"] = spec.name;
  manifest["seed"] = seed;
  manifest["prior"] = {spec.prior.lo, spec.prior.hi};
  manifest["rows"] = views.empty() ? 0 : views[0].image.rows();
  manifest["cols"] = views.empty() ? 0 : views[0].image.cols();
  json instances = json::array();
  for (const Primitive& p : spec.primitives) instances.push_back({{"id", p.id}, {"kind", kind_name(p.kind)}});
  manifest["instances"] = instances;
  json groups = json::array();
  for (const InstanceGroup& g : spec.groups) groups.push_back({{"id", g.id}, {"members", g.members}});
  manifest["groups"] = groups;

  json view_list = json::array();
  for (size_t v = 0; v < views.size(); ++v) {
    const std::string name = view_name(v);
    const RenderedView& rv = views[v];
    json entry;
    entry["image"] = "images/" + name + ".png";
    entry["camera"] = "cams/" + name + "_cam.txt";
    entry["depth"] = "depth_gt/" + name + ".pfm";
    entry["labels"] = "labels/" + name + ".png";
    write_png_gray(dir / entry["image"].get<std::string>(), rv.image);
    write_camera_file(dir / entry["camera"].get<std::string>(), rv.camera, spec.prior.lo, interval);
    write_depth_pfm(dir / entry["depth"].get<std::string>(), rv.depth);
    write_png_labels(dir / entry["labels"].get<std::string>(), rv.labels);
    make_dir(dir / "masks" / name);
    json masks = json::array();
    for (const InstanceMask& m : view_masks(spec, rv)) {
      const std::string rel = "masks/" + name + "/inst_" + std::to_string(m.id) + ".png";
      BinaryImage raster(m.rows, m.cols);
      for (size_t i = 0; i < raster.size(); ++i) raster[i] = m.bits[i] ? 255 : 0;
      write_png_gray(dir / rel, raster);
      masks.push_back(rel);
    }
    entry["masks"] = masks;
    view_list.push_back(entry);
  }
  manifest["views"] = view_list;
  std::ofstream out(dir / "scene.json");
  if (!out) throw IoError("cannot write " + (dir / "scene.json").string());
  out << manifest.dump(2) << '\n';
}

LoadedScene read_scene(const fs::path& dir) {
  const fs::path manifest_path = dir / "scene.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open scene manifest " + manifest_path.string());
  json m;
  try {
    in >> m;
    LoadedScene scene;
    scene.name = m.at("name").get<std::string>();
    const auto prior = m.at("prior").get<std::vector<double>>();
    if (prior.size() != 2 || !(prior[0] > 0.0 && prior[0] < prior[1])) {
      throw DataError(manifest_path.string() + ": prior must be [lo, hi] with 0 < lo < hi");
    }
    scene.prior = {prior[0], prior[1]};
    for (const json& entry : m.at("views")) {
      SceneView view;
      view.image = read_png(dir / entry.at("image").get<std::string>());
      const CameraFile cf = read_camera_file(dir / entry.at("camera").get<std::string>());
      view.camera = cf.camera(view.image.cols(), view.image.rows());
      if (entry.contains("depth")) {
        const fs::path depth_path = dir / entry.at("depth").get<std::string>();
        if (fs::exists(depth_path)) view.gt_depth = read_depth_pfm(depth_path);
      }
      std::vector<fs::path> mask_paths;
      if (entry.contains("masks")) {
        for (const json& p : entry.at("masks")) mask_paths.push_back(dir / p.get<std::string>());
      }
      view.masks = load_mask_files(mask_paths, view.image.rows(), view.image.cols());
      scene.views.push_back(std::move(view));
    }
    if (scene.views.empty()) throw DataError(manifest_path.string() + " lists no views");
    return scene;
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace instmvs
