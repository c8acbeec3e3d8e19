#include "treefilter/feature_map.hpp"

#include <cmath>
#include <string>

namespace treefilter {

FeatureMap::FeatureMap(int c, int h, int w) : channels(c), height(h), width(w) {
  if (c < 1 || h < 1 || w < 1) {
    fail(ErrorKind::size, "feature map dimensions must be positive, got " +
                              std::to_string(c) + "x" + std::to_string(h) + "x" +
                              std::to_string(w));
  }
  data.assign(static_cast<std::size_t>(c) * h * w, 0.0);
}

void FeatureMap::validate() const {
  if (channels < 1 || height < 1 || width < 1) {
    fail(ErrorKind::size, "feature map dimensions must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(channels) * height * width;
  if (data.size() != expected) {
    fail(ErrorKind::dimension, "feature map buffer holds " + std::to_string(data.size()) +
                                   " values, expected " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      fail(ErrorKind::validation,
           "feature map contains a non-finite value at flat index " + std::to_string(i));
    }
  }
}

} // namespace treefilter
