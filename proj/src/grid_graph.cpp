#include "treefilter/grid_graph.hpp"

#include <cmath>
#include <string>

namespace treefilter {

PlanarGraph build_planar_graph(int height, int width) {
  if (height < 1 || width < 1 || static_cast<std::int64_t>(height) * width < 2) {
    fail(ErrorKind::size, "grid must contain at least two vertices, got " +
                              std::to_string(height) + "x" + std::to_string(width));
  }
  PlanarGraph graph;
  graph.height = height;
  graph.width = width;
  const std::int64_t horizontal = static_cast<std::int64_t>(height) * (width - 1);
  const std::int64_t vertical = static_cast<std::int64_t>(height - 1) * width;
  graph.edges.reserve(static_cast<std::size_t>(horizontal + vertical));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x + 1 < width; ++x) {
      const std::int64_t v = static_cast<std::int64_t>(y) * width + x;
      graph.edges.push_back({v, v + 1});
    }
  }
  for (int y = 0; y + 1 < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::int64_t v = static_cast<std::int64_t>(y) * width + x;
      graph.edges.push_back({v, v + width});
    }
  }
  return graph;
}

double embedding_distance(const FeatureMap& embedding, std::int64_t u, std::int64_t v,
                          int channel_begin, int channel_end, double scale) {
  const std::int64_t n = embedding.vertex_count();
  double sum = 0.0;
  for (int c = channel_begin; c < channel_end; ++c) {
    const double d = embedding.data[static_cast<std::size_t>(c) * n + u] -
                     embedding.data[static_cast<std::size_t>(c) * n + v];
    sum += d * d;
  }
  return scale * std::sqrt(sum);
}

PlanarGraph pairwise_dissimilarity(const FeatureMap& embedding, PlanarGraph graph,
                                   double scale) {
  embedding.validate();
  if (embedding.height != graph.height || embedding.width != graph.width) {
    fail(ErrorKind::dimension, "embedding is " + std::to_string(embedding.height) + "x" +
                                   std::to_string(embedding.width) + " but the graph is " +
                                   std::to_string(graph.height) + "x" +
                                   std::to_string(graph.width));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail(ErrorKind::validation, "scale must be a positive finite value");
  }
  graph.weights.resize(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    graph.weights[e] = embedding_distance(embedding, graph.edges[e].u, graph.edges[e].v, 0,
                                          embedding.channels, scale);
  }
  return graph;
}

} // namespace treefilter
