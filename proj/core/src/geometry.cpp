#include "instmvs/geometry.hpp"

#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "instmvs/errors.hpp"

namespace instmvs {

namespace {

constexpr double kMinDepth = 1e-9;
constexpr double kRotationTolerance = 1e-9;

}  // namespace

CameraModel::CameraModel(const Mat3& intrinsics, const Mat3& rotation, const Vec3& translation,
                         int width, int height)
    : intrinsics_(intrinsics),
      rotation_(rotation),
      translation_(translation),
      width_(width),
      height_(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("camera size must be positive");
  }
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kRotationTolerance ||
      std::abs(rotation.determinant() - 1.0) > kRotationTolerance) {
    throw std::invalid_argument("camera rotation is not orthonormal with det 1");
  }
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0) || intrinsics(1, 0) != 0.0 ||
      intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0) {
    throw std::invalid_argument("camera intrinsics must be upper triangular with positive focals");
  }
  if (!translation.allFinite() || !intrinsics.allFinite()) {
    throw std::invalid_argument("camera parameters must be finite");
  }
  inverse_intrinsics_ = intrinsics.inverse();
}

Mat4 CameraModel::extrinsic() const {
  Mat4 e = Mat4::Identity();
  e.topLeftCorner<3, 3>() = rotation_;
  e.topRightCorner<3, 1>() = translation_;
  return e;
}

Projection project(const Vec3& world, const CameraModel& cam) {
  const Vec3 x = cam.rotation() * world + cam.translation();
  if (!(x.z() > kMinDepth)) {
    throw NonPositiveDepth("point does not lie in front of the camera");
  }
  const Vec3 h = cam.intrinsics() * x;
  return {Pixel{h.y() / h.z(), h.x() / h.z()}, x.z()};
}

Vec3 backproject(const Pixel& px, double depth, const CameraModel& cam) {
  if (!(depth > 0.0)) {
    throw NonPositiveDepth("backprojection depth must be positive");
  }
  const Vec3 ray = cam.inverse_intrinsics_ * Vec3(px.col, px.row, 1.0);
  const Vec3 x = ray * (depth / ray.z());
  return cam.rotation().transpose() * (x - cam.translation());
}

Pixel warp(const Pixel& px, double depth, const CameraModel& ref, const CameraModel& src) {
  const Vec3 world = backproject(px, depth, ref);
  try {
    return project(world, src).pixel;
  } catch (const NonPositiveDepth&) {
    throw BehindCamera("warped point lies behind the source camera");
  }
}

WarpKernel make_warp_kernel(const CameraModel& ref, const CameraModel& src) {
  const Mat3 relative_rotation = src.rotation() * ref.rotation().transpose();
  const Vec3 relative_translation = src.translation() - relative_rotation * ref.translation();
  const Mat3 ref_inverse_k = ref.intrinsics().inverse();
  // The z-component of K^-1 [u v 1] is the constant 1 / K(2,2) for an upper
  // triangular K, so depth scaling folds into the matrix.
  return {src.intrinsics() * relative_rotation * ref_inverse_k / ref_inverse_k(2, 2),
          src.intrinsics() * relative_translation};
}

CameraModel CameraFile::camera(int width, int height) const {
  return CameraModel(intrinsics, extrinsic.topLeftCorner<3, 3>(), extrinsic.topRightCorner<3, 1>(),
                     width, height);
}

namespace {

std::string next_token(std::istream& in, const char* context) {
  std::string token;
  if (!(in >> token)) {
    throw DataError(std::string("camera file truncated while reading ") + context);
  }
  return token;
}

double next_number(std::istream& in, const char* context) {
  const std::string token = next_token(in, context);
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size()) {
    throw DataError("camera file: expected a number in " + std::string(context) + ", got '" +
                    token + "'");
  }
  return value;
}

void expect_keyword(std::istream& in, const std::string& keyword) {
  const std::string token = next_token(in, keyword.c_str());
  if (token != keyword) {
    throw DataError("camera file: expected '" + keyword + "', got '" + token + "'");
  }
}

}  // namespace

CameraFile parse_camera_file(std::istream& in) {
  CameraFile file;
  expect_keyword(in, "extrinsic");
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) file.extrinsic(r, c) = next_number(in, "extrinsic");
  }
  expect_keyword(in, "intrinsic");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) file.intrinsics(r, c) = next_number(in, "intrinsic");
  }
  file.depth_min = next_number(in, "depth range");
  file.depth_interval = next_number(in, "depth range");
  return file;
}

CameraFile read_camera_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera file " + path.string());
  try {
    return parse_camera_file(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_camera_file(const std::filesystem::path& path, const CameraModel& cam, double depth_min,
                       double depth_interval) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write camera file " + path.string());
  out << std::setprecision(17);
  const Mat4 e = cam.extrinsic();
  out << "extrinsic\n";
  for (int r = 0; r < 4; ++r) {
    out << e(r, 0) << ' ' << e(r, 1) << ' ' << e(r, 2) << ' ' << e(r, 3) << '\n';
  }
  out << "\nintrinsic\n";
  const Mat3& k = cam.intrinsics();
  for (int r = 0; r < 3; ++r) out << k(r, 0) << ' ' << k(r, 1) << ' ' << k(r, 2) << '\n';
  out << '\n' << depth_min << ' ' << depth_interval << '\n';
  if (!out) throw IoError("failed writing camera file " + path.string());
}

}  // namespace instmvs
