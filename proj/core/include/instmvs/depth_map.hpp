#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "instmvs/image.hpp"

namespace instmvs {

// Per-pixel depth (mm) with a validity flag, row-major.
struct DepthMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> depth;
  std::vector<uint8_t> valid;

  DepthMap() = default;
  DepthMap(int rows_, int cols_)
      : rows(rows_),
        cols(cols_),
        depth(static_cast<size_t>(rows_) * cols_, 0.0),
        valid(static_cast<size_t>(rows_) * cols_, 0) {}

  size_t size() const { return depth.size(); }
  size_t index(int row, int col) const { return static_cast<size_t>(row) * cols + col; }
  bool is_valid(size_t i) const { return valid[i] != 0; }

  bool operator==(const DepthMap&) const = default;
};

// Float raster view; invalid pixels become 0.
Image<float> to_image(const DepthMap& map);
// Pixels with value > 0 are valid.
DepthMap from_image(const Image<float>& img);

void write_depth_pfm(const std::filesystem::path& path, const DepthMap& map);
DepthMap read_depth_pfm(const std::filesystem::path& path);

}  // namespace instmvs
