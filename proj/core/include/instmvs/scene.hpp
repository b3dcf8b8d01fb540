#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instmvs/depth_map.hpp"
#include "instmvs/fusion.hpp"
#include "instmvs/geometry.hpp"
#include "instmvs/image.hpp"
#include "instmvs/instance.hpp"
#include "instmvs/interval.hpp"

namespace instmvs {

// Solid texture: reflectance(x) = base + sum_i amplitude_i * sin(k_i . x + phase_i),
// evaluated at the primitive-local position x (mm).
struct Wave {
  Vec3 k;
  double amplitude = 0.0;
  double phase = 0.0;
};

struct Texture {
  double base = 0.5;
  std::vector<Wave> waves;

  double reflectance(const Vec3& local) const;
};

// Deterministic texture drawn from (seed, id): a handful of waves with
// wavelengths between 16 and 64 mm and amplitudes favoring low frequencies.
Texture random_texture(uint64_t seed, int id);

enum class PrimitiveKind { Plane, Sphere, Box };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Plane;
  int id = 0;
  // Plane: a rectangle centered at `center`, spanned by the unit axes u, v with
  // half extents `half.x()`, `half.y()`. Sphere: `center`, `radius`. Box: the
  // axis-aligned box center +- half.
  Vec3 center = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
  Vec3 half = Vec3::Zero();
  double radius = 0.0;
  Texture texture;
};

// An extra mask covering the union of several primitives (stacked objects).
struct InstanceGroup {
  int id = 0;
  std::vector<int> members;
};

// Cameras on a horizontal arc of radius `radius` around `look_at`. View 0 sits
// on the arc's axis; further views alternate +step, -step, +2 step, ...
struct CameraRing {
  int count = 5;
  double radius = 700.0;
  Vec3 look_at{0.0, 0.0, 700.0};
  double step_deg = 6.0;
  double focal = 450.0;
  int width = 320;
  int height = 256;
};

struct SceneSpec {
  std::string name;
  std::vector<Primitive> primitives;
  std::vector<InstanceGroup> groups;
  CameraRing ring;
  Interval prior{425.0, 935.0};
  double ambient = 0.35;
  Vec3 light{0.3, 0.5, 1.0};  // direction the light travels, world frame
};

// Throws DegenerateSpec on duplicate or zero ids, unknown group members,
// malformed primitives or an empty prior.
void validate(const SceneSpec& spec);

std::vector<CameraModel> ring_cameras(const CameraRing& ring);

struct RenderedView {
  GrayImage image;     // integer gray levels 0..255
  DepthMap depth;      // camera-frame z of the hit; invalid where nothing is hit
  LabelImage labels;   // primitive id, 0 = background
  CameraModel camera;
};

// Nearest ray-primitive hit per pixel with Lambertian shading. Throws
// DegenerateSpec when no primitive is visible, when some primitive is seen by
// no view, or when a visible depth falls outside the prior.
std::vector<RenderedView> render(const SceneSpec& spec);

// Masks of one view: one per visible primitive, then one per group.
std::vector<InstanceMask> view_masks(const SceneSpec& spec, const RenderedView& view);

// Every stride-th hit pixel of each view (raster order), backprojected.
PointCloud gt_point_cloud(std::span<const RenderedView> views, int stride = 1);

// "plane-wall", "shelf" and "orchard".
std::vector<std::string> preset_names();
SceneSpec preset(const std::string& name, uint64_t seed = 0);

// Ground-truth depth span of each instance over all views, and of the scene.
struct SpanReport {
  Interval scene;
  std::vector<std::pair<int, Interval>> instances;
};
SpanReport depth_spans(const SceneSpec& spec, std::span<const RenderedView> views);

// On-disk scene: images/, cams/, depth_gt/, labels/, masks/<view>/ and a
// scene.json manifest. The parent of `dir` must exist.
void write_scene(const std::filesystem::path& dir, const SceneSpec& spec, uint64_t seed,
                 std::span<const RenderedView> views);

struct SceneView {
  GrayImage image;
  CameraModel camera;
  std::optional<DepthMap> gt_depth;
  std::vector<InstanceMask> masks;
};

struct LoadedScene {
  std::string name;
  Interval prior;
  std::vector<SceneView> views;
};

LoadedScene read_scene(const std::filesystem::path& dir);

}  // namespace instmvs
