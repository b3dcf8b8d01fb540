#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace instmvs {

// Row-major single channel raster. Pixel (row, col) has its center at the
// integer coordinate; the origin is the top-left pixel.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  size_t index(int row, int col) const {
    assert(row >= 0 && row < rows_ && col >= 0 && col < cols_);
    return static_cast<size_t>(row) * cols_ + col;
  }

  bool contains(int row, int col) const {
    return row >= 0 && row < rows_ && col >= 0 && col < cols_;
  }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }
  const T* data() const { return data_.data(); }

  bool operator==(const Image&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<float>;
using LabelImage = Image<uint16_t>;
using BinaryImage = Image<uint8_t>;

// Bilinear interpolation at (row, col). The caller guarantees
// 0 <= row <= rows-1 and 0 <= col <= cols-1.
inline double sample_bilinear(const GrayImage& img, double row, double col) {
  int r0 = static_cast<int>(row);
  int c0 = static_cast<int>(col);
  if (r0 >= img.rows() - 1) r0 = img.rows() - 2;
  if (c0 >= img.cols() - 1) c0 = img.cols() - 2;
  const double fr = row - r0;
  const double fc = col - c0;
  const float* p = img.data() + static_cast<size_t>(r0) * img.cols() + c0;
  const double top = p[0] + fc * (p[1] - p[0]);
  const double bottom = p[img.cols()] + fc * (p[img.cols() + 1] - p[img.cols()]);
  return top + fr * (bottom - top);
}

}  // namespace instmvs
