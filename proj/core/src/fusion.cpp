#include "instmvs/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "instmvs/errors.hpp"

namespace instmvs {

DepthMap filter_by_confidence(const DepthMap& depth, const ConfidenceMap& conf, double threshold) {
  if (depth.rows != conf.rows || depth.cols != conf.cols) {
    throw DimensionMismatch("confidence map does not match the depth map");
  }
  DepthMap out = depth;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out.valid[i] && conf.values[i] < threshold) {
      out.valid[i] = 0;
      out.depth[i] = 0.0;
    }
  }
  return out;
}

namespace {

// Camera-frame point and pixel, without the exceptions of project().
struct Projected {
  double row, col, z;
};

bool project_fast(const Vec3& world, const CameraModel& cam, Projected& out) {
  const Vec3 x = cam.rotation() * world + cam.translation();
  if (!(x.z() > 1e-9)) return false;
  const Vec3 h = cam.intrinsics() * x;
  out = {h.y() / h.z(), h.x() / h.z(), x.z()};
  return true;
}

}  // namespace

PointCloud fuse(std::span<const DepthMap> depths, std::span<const ConfidenceMap> confs,
                std::span<const CameraModel> cams, const FusionConfig& cfg,
                std::span<const GrayImage> images) {
  const size_t n = depths.size();
  if (cams.size() != n) throw DimensionMismatch("fusion needs one camera per depth map");
  if (!confs.empty() && confs.size() != n) {
    throw DimensionMismatch("fusion needs one confidence map per depth map");
  }
  if (!images.empty() && images.size() != n) {
    throw DimensionMismatch("fusion needs one image per depth map");
  }
  if (cfg.min_views < 1 || !(cfg.reprojection_px > 0.0) || !(cfg.relative_depth > 0.0)) {
    throw std::invalid_argument("fusion tolerances must be positive");
  }

  std::vector<DepthMap> maps;
  maps.reserve(n);
  for (size_t v = 0; v < n; ++v) {
    if (depths[v].rows != cams[v].height() || depths[v].cols != cams[v].width()) {
      throw DimensionMismatch("depth map " + std::to_string(v) + " does not match its camera");
    }
    maps.push_back(confs.empty() ? depths[v]
                                 : filter_by_confidence(depths[v], confs[v], cfg.min_confidence));
  }

  PointCloud cloud;
  if (n < 2) return cloud;
  std::vector<std::vector<uint8_t>> consumed(n);
  for (size_t v = 0; v < n; ++v) consumed[v].assign(maps[v].size(), 0);

  struct Match {
    size_t view;
    size_t pixel;
    Vec3 point;
  };
  std::vector<Match> matches;

  for (size_t ref = 0; ref < n; ++ref) {
    const DepthMap& rd = maps[ref];
    for (int r = 0; r < rd.rows; ++r) {
      for (int c = 0; c < rd.cols; ++c) {
        const size_t p = rd.index(r, c);
        if (!rd.valid[p] || consumed[ref][p]) continue;
        const Vec3 x = backproject({double(r), double(c)}, rd.depth[p], cams[ref]);
        matches.clear();
        for (size_t src = 0; src < n; ++src) {
          if (src == ref) continue;
          Projected pr;
          if (!project_fast(x, cams[src], pr)) continue;
          const long qr = std::lround(pr.row);
          const long qc = std::lround(pr.col);
          const DepthMap& sd = maps[src];
          if (qr < 0 || qc < 0 || qr >= sd.rows || qc >= sd.cols) continue;
          const size_t q = sd.index(int(qr), int(qc));
          if (!sd.valid[q] || consumed[src][q]) continue;
          const double sampled = sd.depth[q];
          if (std::abs(pr.z - sampled) > cfg.relative_depth * sampled) continue;
          const Vec3 y = backproject({double(qr), double(qc)}, sampled, cams[src]);
          Projected back;
          if (!project_fast(y, cams[ref], back)) continue;
          if (std::hypot(back.row - r, back.col - c) > cfg.reprojection_px) continue;
          matches.push_back({src, q, y});
        }
        consumed[ref][p] = 1;
        if (static_cast<int>(matches.size()) < cfg.min_views) continue;

        Vec3 sum = x;
        double gray = images.empty() ? 0.0 : images[ref][p];
        for (const Match& m : matches) {
          sum += m.point;
          if (!images.empty()) gray += images[m.view][m.pixel];
          consumed[m.view][m.pixel] = 1;
        }
        const double count = static_cast<double>(matches.size() + 1);
        cloud.points.push_back(sum / count);
        cloud.views.push_back(static_cast<int>(ref));
        if (!images.empty()) {
          const auto g = static_cast<uint8_t>(std::clamp(std::lround(gray / count), 0L, 255L));
          cloud.colors.push_back({g, g, g});
        }
      }
    }
  }
  return cloud;
}

size_t NearestNeighborIndex::KeyHash::operator()(const Key& k) const {
  uint64_t h = static_cast<uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
  h ^= static_cast<uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
  return static_cast<size_t>(h);
}

NearestNeighborIndex::Key NearestNeighborIndex::key_of(const Vec3& p) const {
  return {static_cast<int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<int64_t>(std::floor(p.z() / cell_size_))};
}

NearestNeighborIndex::NearestNeighborIndex(std::span<const Vec3> points, double cell_size)
    : cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
  if (points.empty()) throw EmptyCloud("cannot index an empty cloud");
  std::vector<std::pair<Key, uint32_t>> keyed;
  keyed.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) throw DataError("point cloud has a non-finite coordinate");
    keyed.emplace_back(key_of(points[i]), static_cast<uint32_t>(i));
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first.x != b.first.x) return a.first.x < b.first.x;
    if (a.first.y != b.first.y) return a.first.y < b.first.y;
    if (a.first.z != b.first.z) return a.first.z < b.first.z;
    return a.second < b.second;
  });
  sorted_.reserve(points.size());
  lo_ = hi_ = keyed.front().first;
  for (size_t i = 0; i < keyed.size();) {
    size_t j = i;
    while (j < keyed.size() && keyed[j].first == keyed[i].first) sorted_.push_back(points[keyed[j++].second]);
    const Key& k = keyed[i].first;
    cells_.emplace(k, std::pair<uint32_t, uint32_t>(uint32_t(i), uint32_t(j)));
    lo_ = {std::min(lo_.x, k.x), std::min(lo_.y, k.y), std::min(lo_.z, k.z)};
    hi_ = {std::max(hi_.x, k.x), std::max(hi_.y, k.y), std::max(hi_.z, k.z)};
    i = j;
  }
}

double NearestNeighborIndex::distance(const Vec3& query, double cap) const {
  const Key center = key_of(query);
  double best2 = cap * cap;
  auto visit = [&](int64_t x, int64_t y, int64_t z) {
    if (x < lo_.x || x > hi_.x || y < lo_.y || y > hi_.y || z < lo_.z || z > hi_.z) return;
    const auto it = cells_.find({x, y, z});
    if (it == cells_.end()) return;
    for (uint32_t i = it->second.first; i < it->second.second; ++i) {
      best2 = std::min(best2, (sorted_[i] - query).squaredNorm());
    }
  };
  // Rings beyond the occupied bounds hold nothing.
  const int64_t max_ring = std::max({std::abs(center.x - lo_.x), std::abs(center.x - hi_.x),
                                     std::abs(center.y - lo_.y), std::abs(center.y - hi_.y),
                                     std::abs(center.z - lo_.z), std::abs(center.z - hi_.z)});
  for (int64_t ring = 0; ring <= max_ring; ++ring) {
    // Points outside rings 0..ring-1 are at least (ring - 1) cells away.
    const double reach = static_cast<double>(ring - 1) * cell_size_;
    if (ring > 0 && reach * reach >= best2) break;
    for (int64_t dx = -ring; dx <= ring; ++dx) {
      for (int64_t dy = -ring; dy <= ring; ++dy) {
        const bool face = std::abs(dx) == ring || std::abs(dy) == ring;
        if (face) {
          for (int64_t dz = -ring; dz <= ring; ++dz) visit(center.x + dx, center.y + dy, center.z + dz);
        } else {
          visit(center.x + dx, center.y + dy, center.z - ring);
          if (ring > 0) visit(center.x + dx, center.y + dy, center.z + ring);
        }
      }
    }
  }
  return std::min(std::sqrt(best2), cap);
}

namespace {

constexpr size_t kExhaustiveLimit = 500;

double mean_distance(std::span<const Vec3> from, std::span<const Vec3> to, double cap) {
  double sum = 0.0;
  if (from.size() < kExhaustiveLimit || to.size() < kExhaustiveLimit) {
    for (const Vec3& p : from) {
      double best2 = cap * cap;
      for (const Vec3& q : to) best2 = std::min(best2, (p - q).squaredNorm());
      sum += std::min(std::sqrt(best2), cap);
    }
  } else {
    const NearestNeighborIndex index(to, std::max(cap / 8.0, 1e-6));
    for (const Vec3& p : from) sum += index.distance(p, cap);
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

CloudMetrics accuracy_completeness(const PointCloud& pred, const PointCloud& gt, double dist_cap) {
  if (pred.empty()) throw EmptyCloud("predicted cloud is empty");
  if (gt.empty()) throw EmptyCloud("ground-truth cloud is empty");
  if (!(dist_cap > 0.0)) throw std::invalid_argument("distance cap must be positive");
  CloudMetrics m;
  m.accuracy = mean_distance(pred.points, gt.points, dist_cap);
  m.completeness = mean_distance(gt.points, pred.points, dist_cap);
  m.overall = 0.5 * (m.accuracy + m.completeness);
  return m;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  const bool color = !cloud.colors.empty();
  if (color && cloud.colors.size() != cloud.points.size()) {
    throw DimensionMismatch("point colors do not match the point count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  std::vector<char> record(color ? 15 : 12);
  for (size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const float f = static_cast<float>(cloud.points[i][a]);
      std::memcpy(record.data() + 4 * a, &f, 4);
    }
    if (color) std::memcpy(record.data() + 12, cloud.colors[i].data(), 3);
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw IoError(path.string() + " is not a PLY file");
  size_t count = 0;
  std::vector<std::string> props;
  bool binary_le = false;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex") throw IoError(path.string() + ": unsupported element " + name);
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      props.push_back(type + " " + name);
    }
  }
  const std::vector<std::string> xyz{"float x", "float y", "float z"};
  const std::vector<std::string> rgb{"float x",         "float y",           "float z",
                                     "uchar red",       "uchar green",       "uchar blue"};
  if (!binary_le || (props != xyz && props != rgb)) {
    throw IoError(path.string() + ": unsupported PLY layout");
  }
  const bool color = props.size() == 6;
  PointCloud cloud;
  cloud.points.resize(count);
  if (color) cloud.colors.resize(count);
  std::vector<char> record(color ? 15 : 12);
  for (size_t i = 0; i < count; ++i) {
    if (!in.read(record.data(), static_cast<std::streamsize>(record.size()))) {
      throw IoError(path.string() + ": truncated vertex data");
    }
    for (int a = 0; a < 3; ++a) {
      float f;
      std::memcpy(&f, record.data() + 4 * a, 4);
      cloud.points[i][a] = f;
    }
    if (color) std::memcpy(cloud.colors[i].data(), record.data() + 12, 3);
  }
  return cloud;
}

}  // namespace instmvs
