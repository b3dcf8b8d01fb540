#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>

namespace instmvs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Sub-pixel image coordinate, (row, col) with pixel centers on integers.
struct Pixel {
  double row = 0.0;
  double col = 0.0;
};

// Distortion-free pinhole camera. Rotation and translation map world
// coordinates (mm) into the camera frame: x_cam = R * x_world + t.
class CameraModel {
 public:
  CameraModel() = default;

  // Throws std::invalid_argument when R is not a proper rotation, K is not
  // upper triangular with positive focal entries, or the size is not positive.
  CameraModel(const Mat3& intrinsics, const Mat3& rotation, const Vec3& translation, int width,
              int height);

  const Mat3& intrinsics() const { return intrinsics_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  int width() const { return width_; }
  int height() const { return height_; }

  // Camera center in world coordinates.
  Vec3 center() const { return -rotation_.transpose() * translation_; }
  // 4x4 world-to-camera matrix.
  Mat4 extrinsic() const;

 private:
  Mat3 intrinsics_ = Mat3::Identity();
  Mat3 inverse_intrinsics_ = Mat3::Identity();
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
  int width_ = 1;
  int height_ = 1;

  friend Vec3 backproject(const Pixel& px, double depth, const CameraModel& cam);
};

struct Projection {
  Pixel pixel;
  double depth = 0.0;
};

// Throws NonPositiveDepth when the camera-frame z is <= 1e-9.
Projection project(const Vec3& world, const CameraModel& cam);

// Throws NonPositiveDepth when depth <= 0.
Vec3 backproject(const Pixel& px, double depth, const CameraModel& cam);

// Pixel in `src` observing the point at `depth` along the ray of `px` in
// `ref`. Throws BehindCamera when that point is not in front of `src`.
Pixel warp(const Pixel& px, double depth, const CameraModel& ref, const CameraModel& src);

// Affine-in-depth form of warp used by plane sweeps: the homogeneous source
// coordinate of reference pixel (row, col) at depth d is
//   h = d * ray * [col, row, 1]^T + offset,  pixel = (h.y / h.z, h.x / h.z).
struct WarpKernel {
  Mat3 ray;
  Vec3 offset;
};

WarpKernel make_warp_kernel(const CameraModel& ref, const CameraModel& src);

// MVSNet-style camera text file.
struct CameraFile {
  Mat4 extrinsic = Mat4::Identity();
  Mat3 intrinsics = Mat3::Identity();
  double depth_min = 0.0;
  double depth_interval = 0.0;

  CameraModel camera(int width, int height) const;
};

CameraFile parse_camera_file(std::istream& in);
CameraFile read_camera_file(const std::filesystem::path& path);
void write_camera_file(const std::filesystem::path& path, const CameraModel& cam, double depth_min,
                       double depth_interval);

}  // namespace instmvs
