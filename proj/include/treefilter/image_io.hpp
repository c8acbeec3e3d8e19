#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treefilter/feature_map.hpp"

namespace treefilter {

// 8-bit image, interleaved pixels, 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

// PGM (P5) and PPM (P6), maxval 255. Parse errors report the byte offset.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

// Planar [0,1] features from interleaved [0,255] pixels and back.
FeatureMap image_to_features(const Image& image);
Image features_to_image(const FeatureMap& features); // clamps to [0,255]

} // namespace treefilter
