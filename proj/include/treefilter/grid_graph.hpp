#pragma once

#include <cstdint>
#include <vector>

#include "treefilter/feature_map.hpp"

namespace treefilter {

struct GridEdge {
  std::int64_t u = 0;
  std::int64_t v = 0;

  bool operator==(const GridEdge&) const = default;
};

// 4-connected grid graph over H x W vertices. The edge list enumerates all
// horizontal edges in row-major order, then all vertical edges in row-major
// order; edge indices are stable across calls and feed the MST tie-break.
struct PlanarGraph {
  int height = 0;
  int width = 0;
  std::vector<GridEdge> edges;
  std::vector<double> weights; // empty until dissimilarities are assigned

  std::int64_t vertex_count() const {
    return static_cast<std::int64_t>(height) * width;
  }
  std::int64_t edge_count() const {
    return static_cast<std::int64_t>(edges.size());
  }
  bool has_weights() const { return !weights.empty(); }
};

// Edge topology for an H x W grid; weights are left unassigned.
// Rejects grids with fewer than two vertices.
PlanarGraph build_planar_graph(int height, int width);

// Populates graph.weights with scale * L2 distance between the endpoint
// embedding vectors. The embedding's spatial dims must match the graph.
PlanarGraph pairwise_dissimilarity(const FeatureMap& embedding, PlanarGraph graph,
                                   double scale = 1.0);

// Scaled L2 distance between the embedding vectors at vertices u and v,
// restricted to channels [channel_begin, channel_end).
double embedding_distance(const FeatureMap& embedding, std::int64_t u, std::int64_t v,
                          int channel_begin, int channel_end, double scale);

} // namespace treefilter
