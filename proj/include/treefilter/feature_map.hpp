#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "treefilter/error.hpp"

namespace treefilter {

// Dense C x H x W tensor stored as row-major per-channel planes. The same
// type serves as guidance map, embedding, and filter input.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data; // length channels * height * width

  FeatureMap() = default;
  FeatureMap(int c, int h, int w);

  std::int64_t vertex_count() const {
    return static_cast<std::int64_t>(height) * width;
  }

  double at(int c, int y, int x) const { return data[plane_index(c, y, x)]; }
  double& at(int c, int y, int x) { return data[plane_index(c, y, x)]; }

  const double* plane(int c) const {
    return data.data() + static_cast<std::size_t>(c) * vertex_count();
  }
  double* plane(int c) {
    return data.data() + static_cast<std::size_t>(c) * vertex_count();
  }

  // Checks dimensions, buffer length, and that every value is finite.
  void validate() const;

private:
  std::size_t plane_index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
};

} // namespace treefilter
