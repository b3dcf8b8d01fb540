#pragma once

#include <filesystem>

#include "instmvs/image.hpp"

namespace instmvs {

// PFM ("Pf", single channel float32, little-endian, rows stored bottom-up).
void write_pfm(const std::filesystem::path& path, const Image<float>& img);
Image<float> read_pfm(const std::filesystem::path& path);

// 8-bit grayscale PNG. Float pixels are rounded and clamped to [0, 255].
void write_png_gray(const std::filesystem::path& path, const GrayImage& img);
void write_png_gray(const std::filesystem::path& path, const BinaryImage& img);
// 16-bit grayscale PNG (instance labels).
void write_png_labels(const std::filesystem::path& path, const LabelImage& img);

// Reads any grayscale/RGB PNG of 8 or 16 bit depth. RGB is converted to gray
// with Rec.601 weights; the values keep their native bit depth range.
Image<float> read_png(const std::filesystem::path& path);
LabelImage read_png_labels(const std::filesystem::path& path);

}  // namespace instmvs
