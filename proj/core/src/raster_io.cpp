#include "instmvs/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "instmvs/errors.hpp"

namespace instmvs {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "raster I/O assumes a little-endian host");

void write_pfm(const fs::path& path, const Image<float>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PFM " + path.string());
  out << "Pf\n" << img.cols() << ' ' << img.rows() << "\n-1\n";
  for (int r = img.rows() - 1; r >= 0; --r) {
    out.write(reinterpret_cast<const char*>(img.data() + static_cast<size_t>(r) * img.cols()),
              static_cast<std::streamsize>(sizeof(float) * img.cols()));
  }
  if (!out) throw IoError("failed writing PFM " + path.string());
}

Image<float> read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PFM " + path.string());
  std::string magic;
  int cols = 0;
  int rows = 0;
  double scale = 0.0;
  in >> magic >> cols >> rows >> scale;
  if (!in || magic != "Pf") throw DataError(path.string() + ": not a single-channel PFM");
  if (cols <= 0 || rows <= 0) throw DataError(path.string() + ": bad PFM size");
  if (scale >= 0.0) throw DataError(path.string() + ": big-endian PFM is not supported");
  in.get();  // single whitespace byte after the header
  Image<float> img(rows, cols);
  std::vector<float> row(static_cast<size_t>(cols));
  for (int r = rows - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(sizeof(float) * cols));
    if (!in) throw DataError(path.string() + ": PFM truncated");
    std::copy(row.begin(), row.end(), &img(r, 0));
  }
  return img;
}

namespace {

struct FileCloser {
  void operator()(FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) {
  throw IoError(std::string("libpng: ") + message);
}

void png_warning_handler(png_structp, png_const_charp) {}

class PngWriter {
 public:
  explicit PngWriter(const fs::path& path) : path_(path), file_(std::fopen(path.c_str(), "wb")) {
    if (!file_) throw IoError("cannot write PNG " + path.string());
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                   png_warning_handler);
    info_ = png_create_info_struct(png_);
    png_init_io(png_, file_.get());
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  void write(int rows, int cols, int bit_depth, const std::vector<png_bytep>& row_pointers) {
    png_set_IHDR(png_, info_, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows),
                 bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png_, info_);
    if (bit_depth == 16) png_set_swap(png_);
    png_write_image(png_, const_cast<png_bytepp>(row_pointers.data()));
    png_write_end(png_, nullptr);
  }

 private:
  fs::path path_;
  FilePtr file_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

struct DecodedPng {
  int rows = 0;
  int cols = 0;
  int bit_depth = 8;
  std::vector<uint16_t> values;  // gray, native bit depth range
};

DecodedPng decode_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open PNG " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                           png_warning_handler);
  png_infop info = png_create_info_struct(png);
  DecodedPng out;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);
    png_read_update_info(png, info);
    out.rows = static_cast<int>(png_get_image_height(png, info));
    out.cols = static_cast<int>(png_get_image_width(png, info));
    depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    out.bit_depth = depth;
    const size_t stride = png_get_rowbytes(png, info);
    std::vector<png_byte> buffer(stride * out.rows);
    std::vector<png_bytep> rows(out.rows);
    for (int r = 0; r < out.rows; ++r) rows[r] = buffer.data() + stride * r;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    out.values.resize(static_cast<size_t>(out.rows) * out.cols);
    for (int r = 0; r < out.rows; ++r) {
      for (int c = 0; c < out.cols; ++c) {
        double v[3] = {0, 0, 0};
        for (int ch = 0; ch < channels && ch < 3; ++ch) {
          const size_t k = static_cast<size_t>(c) * channels + ch;
          if (depth == 16) {
            uint16_t s = 0;
            std::memcpy(&s, rows[r] + 2 * k, 2);
            v[ch] = s;
          } else {
            v[ch] = rows[r][k];
          }
        }
        const double gray = channels >= 3 ? 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2] : v[0];
        out.values[static_cast<size_t>(r) * out.cols + c] = static_cast<uint16_t>(std::lround(gray));
      }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_png_gray(const fs::path& path, const GrayImage& img) {
  BinaryImage bytes(img.rows(), img.cols());
  for (size_t i = 0; i < img.size(); ++i) {
    bytes[i] = static_cast<uint8_t>(std::clamp(std::lround(img[i]), 0L, 255L));
  }
  write_png_gray(path, bytes);
}

void write_png_gray(const fs::path& path, const BinaryImage& img) {
  std::vector<png_bytep> rows(img.rows());
  for (int r = 0; r < img.rows(); ++r) {
    rows[r] = const_cast<png_bytep>(img.data() + static_cast<size_t>(r) * img.cols());
  }
  PngWriter(path).write(img.rows(), img.cols(), 8, rows);
}

void write_png_labels(const fs::path& path, const LabelImage& img) {
  std::vector<png_bytep> rows(img.rows());
  for (int r = 0; r < img.rows(); ++r) {
    rows[r] = reinterpret_cast<png_bytep>(
        const_cast<uint16_t*>(img.data() + static_cast<size_t>(r) * img.cols()));
  }
  PngWriter(path).write(img.rows(), img.cols(), 16, rows);
}

Image<float> read_png(const fs::path& path) {
  const DecodedPng png = decode_png(path);
  Image<float> img(png.rows, png.cols);
  for (size_t i = 0; i < img.size(); ++i) img[i] = png.values[i];
  return img;
}

LabelImage read_png_labels(const fs::path& path) {
  const DecodedPng png = decode_png(path);
  LabelImage img(png.rows, png.cols);
  for (size_t i = 0; i < img.size(); ++i) img[i] = png.values[i];
  return img;
}

}  // namespace instmvs
