#include "instmvs/depth_map.hpp"

#include "instmvs/raster_io.hpp"

namespace instmvs {

Image<float> to_image(const DepthMap& map) {
  Image<float> img(map.rows, map.cols, 0.0f);
  for (size_t i = 0; i < map.size(); ++i) {
    if (map.valid[i]) img[i] = static_cast<float>(map.depth[i]);
  }
  return img;
}

DepthMap from_image(const Image<float>& img) {
  DepthMap map(img.rows(), img.cols());
  for (size_t i = 0; i < img.size(); ++i) {
    if (img[i] > 0.0f) {
      map.depth[i] = img[i];
      map.valid[i] = 1;
    }
  }
  return map;
}

void write_depth_pfm(const std::filesystem::path& path, const DepthMap& map) {
  write_pfm(path, to_image(map));
}

DepthMap read_depth_pfm(const std::filesystem::path& path) { return from_image(read_pfm(path)); }

}  // namespace instmvs
