#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "helpers.hpp"
#include "instmvs/depth_map.hpp"
#include "instmvs/errors.hpp"
#include "instmvs/raster_io.hpp"

namespace instmvs {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(RasterIo, PfmRoundTripIsExact) {
  test::TempDir dir("pfm");
  Image<float> img(5, 7);
  for (size_t i = 0; i < img.size(); ++i) img[i] = 0.1f * static_cast<float>(i) - 1.3f;
  write_pfm(dir / "a.pfm", img);
  EXPECT_EQ(read_pfm(dir / "a.pfm"), img);
}

TEST(RasterIo, PfmStoresRowsBottomUp) {
  test::TempDir dir("pfm_order");
  Image<float> img(2, 3);
  for (int c = 0; c < 3; ++c) {
    img(0, c) = 1.0f;  // top row
    img(1, c) = 2.0f;  // bottom row
  }
  write_pfm(dir / "a.pfm", img);
  const std::string bytes = slurp(dir / "a.pfm");
  EXPECT_EQ(bytes.substr(0, 3), "Pf\n");
  const size_t data = bytes.size() - 6 * sizeof(float);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + data, sizeof first);
  EXPECT_EQ(first, 2.0f);
}

TEST(RasterIo, DepthPfmKeepsValidityAsZero) {
  test::TempDir dir("depth");
  DepthMap d(3, 4);
  d.depth[5] = 612.25;
  d.valid[5] = 1;
  d.depth[7] = 700.0;  // invalid pixels are written as 0
  write_depth_pfm(dir / "d.pfm", d);
  const DepthMap back = read_depth_pfm(dir / "d.pfm");
  EXPECT_EQ(back.valid[5], 1);
  EXPECT_EQ(back.depth[5], 612.25);
  EXPECT_EQ(back.valid[7], 0);
  EXPECT_EQ(back.depth[7], 0.0);
}

TEST(RasterIo, PngGrayAndLabelsRoundTrip) {
  test::TempDir dir("png");
  GrayImage gray(6, 9);
  LabelImage labels(6, 9);
  for (size_t i = 0; i < gray.size(); ++i) {
    gray[i] = static_cast<float>((i * 37) % 256);
    labels[i] = static_cast<uint16_t>(i * 1000 % 65536);
  }
  write_png_gray(dir / "g.png", gray);
  write_png_labels(dir / "l.png", labels);
  EXPECT_EQ(read_png(dir / "g.png"), gray);
  EXPECT_EQ(read_png_labels(dir / "l.png"), labels);
}

TEST(RasterIo, PngRoundsAndClamps) {
  test::TempDir dir("png_clamp");
  GrayImage gray(1, 3);
  gray[0] = -4.0f;
  gray[1] = 12.6f;
  gray[2] = 300.0f;
  write_png_gray(dir / "g.png", gray);
  const Image<float> back = read_png(dir / "g.png");
  EXPECT_EQ(back[0], 0.0f);
  EXPECT_EQ(back[1], 13.0f);
  EXPECT_EQ(back[2], 255.0f);
}

TEST(RasterIo, MissingOrCorruptFilesRaiseIoErrors) {
  test::TempDir dir("io_err");
  EXPECT_THROW(read_pfm(dir / "missing.pfm"), IoError);
  EXPECT_THROW(read_png(dir / "missing.png"), IoError);
  std::ofstream(dir / "bad.pfm") << "P6\n1 1\n-1\n";
  EXPECT_THROW(read_pfm(dir / "bad.pfm"), DataError);
  std::ofstream(dir / "short.pfm") << "Pf\n4 4\n-1\nxx";
  EXPECT_THROW(read_pfm(dir / "short.pfm"), DataError);
}

}  // namespace
}  // namespace instmvs
