#pragma once

#include <Eigen/Geometry>
#include <filesystem>
#include <random>
#include <string>

#include "instmvs/geometry.hpp"
#include "instmvs/scene.hpp"

namespace instmvs::test {

inline Mat3 intrinsics(double f, double cx, double cy) {
  Mat3 k = Mat3::Identity();
  k(0, 0) = k(1, 1) = f;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return k;
}

inline CameraModel random_camera(std::mt19937_64& rng, int width = 160, int height = 128) {
  std::uniform_real_distribution<double> angle(-0.3, 0.3);
  std::uniform_real_distribution<double> shift(-100.0, 100.0);
  const Mat3 r = (Eigen::AngleAxisd(angle(rng), Vec3::UnitX()) *
                  Eigen::AngleAxisd(angle(rng), Vec3::UnitY()) *
                  Eigen::AngleAxisd(angle(rng), Vec3::UnitZ()))
                     .toRotationMatrix();
  return CameraModel(intrinsics(200.0, 0.5 * (width - 1), 0.5 * (height - 1)), r,
                     Vec3(shift(rng), shift(rng), shift(rng)), width, height);
}

// A preset shrunk to `scale` of the default resolution with the same field
// of view, for fast tests.
inline SceneSpec small_preset(const std::string& name, double scale = 0.3, int views = 3) {
  SceneSpec spec = preset(name, 0);
  spec.ring.width = static_cast<int>(spec.ring.width * scale);
  spec.ring.height = static_cast<int>(spec.ring.height * scale);
  spec.ring.focal *= scale;
  spec.ring.count = views;
  return spec;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("instmvs_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace instmvs::test
