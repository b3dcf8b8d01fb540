#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "instmvs/confidence.hpp"
#include "instmvs/depth_map.hpp"
#include "instmvs/geometry.hpp"

namespace instmvs {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::array<uint8_t, 3>> colors;  // empty or one per point
  std::vector<int> views;                      // empty or one per point

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct FusionConfig {
  double min_confidence = 0.3;  // tau_c
  double reprojection_px = 1.0;
  double relative_depth = 0.01;
  int min_views = 2;  // consistent views besides the reference
};

// Marks pixels with confidence below `threshold` invalid.
DepthMap filter_by_confidence(const DepthMap& depth, const ConfidenceMap& conf, double threshold);

// Multi-view geometric-consistency fusion. Views are visited in order; a
// reference pixel whose point is confirmed by at least `min_views` other
// views emits the mean of the confirming points, and every pixel that took
// part is consumed. `confs` may be empty (no filtering); `images` may be
// empty (no colors).
PointCloud fuse(std::span<const DepthMap> depths, std::span<const ConfidenceMap> confs,
                std::span<const CameraModel> cams, const FusionConfig& cfg,
                std::span<const GrayImage> images = {});

struct CloudMetrics {
  double accuracy = 0.0;
  double completeness = 0.0;
  double overall = 0.0;
};

// Exact capped nearest-neighbor queries over a uniform voxel grid, searched
// ring by ring outward from the query cell.
class NearestNeighborIndex {
 public:
  NearestNeighborIndex(std::span<const Vec3> points, double cell_size);
  // Distance to the nearest indexed point, or `cap` when none is closer.
  double distance(const Vec3& query, double cap) const;

 private:
  struct Key {
    int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& k) const;
  };
  Key key_of(const Vec3& p) const;

  double cell_size_;
  std::vector<Vec3> sorted_;  // points grouped by cell
  std::unordered_map<Key, std::pair<uint32_t, uint32_t>, KeyHash> cells_;  // [begin, end)
  Key lo_{}, hi_{};  // occupied cell bounds
};

// Mean capped nearest-neighbor distance from each cloud to the other. Clouds
// under 500 points are searched exhaustively. Throws EmptyCloud when either
// cloud is empty.
CloudMetrics accuracy_completeness(const PointCloud& pred, const PointCloud& gt,
                                   double dist_cap = 20.0);

// Binary little-endian PLY: float x, y, z and optional uchar red, green, blue.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace instmvs
