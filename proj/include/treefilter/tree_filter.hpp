#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treefilter/feature_map.hpp"
#include "treefilter/spanning_tree.hpp"

namespace treefilter {

// Unit-operation counters behind the complexity evidence. A DP pass adds one
// vertex visit per vertex; the dense reference path adds one similarity
// evaluation per vertex pair.
struct WorkCounters {
  std::uint64_t vertex_visits = 0;
  std::uint64_t similarity_evaluations = 0;
};

// Per-vertex similarity of the edge to the parent, S_v = exp(-omega_v) with
// omega clamped to >= 0, so S_v is always in (0, 1]. The root entry is 1 and
// never read by the passes.
struct EdgeSimilarity {
  std::vector<double> values;
};

EdgeSimilarity edge_similarity(const SpanningTree& tree);
EdgeSimilarity edge_similarity(std::span<const double> parent_omega, std::int64_t root);

// Leaf-to-root pass. Each vertex ends up with its own value plus the
// similarity-weighted aggregate of every child subtree:
//   aggr_v = xi_v + sum over children c of S_c * aggr_c
// `values` holds `channels` planes of length N; visits run deepest level first.
template <class Scalar>
std::vector<Scalar> aggregate(const SpanningTree& tree, std::span<const Scalar> similarity,
                              std::span<const Scalar> values, std::int64_t channels,
                              WorkCounters* counters = nullptr);

// Root-to-leaf pass completing the tree sum started by aggregate:
//   prop_root = aggr_root
//   prop_v    = S_v * prop_parent + (1 - S_v^2) * aggr_v
// After this, prop_v equals the similarity-weighted sum over the whole tree.
template <class Scalar>
std::vector<Scalar> propagate(const SpanningTree& tree, std::span<const Scalar> similarity,
                              std::span<const Scalar> aggregated, std::int64_t channels,
                              WorkCounters* counters = nullptr);

// Everything the backward pass reuses from a forward run.
template <class Scalar>
struct FilterCacheT {
  std::int64_t channels = 0;
  std::int64_t vertex_count = 0;
  std::vector<Scalar> aggregated;      // channels x N, leaf-to-root partial sums
  std::vector<Scalar> aggregated_ones; // N, same pass over the all-ones input
  std::vector<Scalar> unnormalized;    // channels x N, full tree sums
  std::vector<Scalar> normalization;   // N, z_v in [1, N]
  std::vector<Scalar> output;          // channels x N, unnormalized / normalization
  WorkCounters counters;               // exactly 2N vertex visits per forward
};
using FilterCache = FilterCacheT<double>;

// Filters `channels` planes of length N in two DP passes. The input and the
// all-ones normalization channel ride through the same pass, so one forward
// costs exactly one aggregate visit and one propagate visit per vertex.
template <class Scalar>
FilterCacheT<Scalar> forward(const SpanningTree& tree, std::span<const Scalar> similarity,
                             std::span<const Scalar> input, std::int64_t channels);

struct Gradients {
  std::vector<double> input;       // channels x N, dloss/dx
  std::vector<double> edge_weight; // N, dloss/domega keyed by child vertex; root slot 0
};

// Analytic gradients of a loss through the filter given dloss/doutput.
// Two more DP passes produce the input gradient; a final sweep over the tree
// edges produces the per-edge dissimilarity gradient.
Gradients backward(const SpanningTree& tree, std::span<const double> similarity,
                   const FilterCache& cache, std::span<const double> output_grad,
                   std::int64_t channels, WorkCounters* counters = nullptr);

// Similarity between `query` and every vertex: the product of edge
// similarities along the unique connecting path. Single O(N) traversal;
// out[query] == 1.
std::vector<double> affinity_map(const SpanningTree& tree,
                                 std::span<const double> similarity, std::int64_t query);

struct GroupedFilterOptions {
  int groups = 1;
  double scale = 1.0;
  std::uint64_t seed = 0;
  bool residual = false; // add the input back onto the filtered output
};

// The full module composition: one MST built from the guidance map, per-group
// dissimilarities taken from contiguous embedding channel blocks, and each
// input channel block filtered with its own group's similarities.
FeatureMap grouped_filter(const FeatureMap& guidance, const FeatureMap& embedding,
                          const FeatureMap& input, const GroupedFilterOptions& options);

extern template std::vector<float> aggregate<float>(const SpanningTree&, std::span<const float>,
                                                    std::span<const float>, std::int64_t,
                                                    WorkCounters*);
extern template std::vector<double> aggregate<double>(const SpanningTree&, std::span<const double>,
                                                      std::span<const double>, std::int64_t,
                                                      WorkCounters*);
extern template std::vector<float> propagate<float>(const SpanningTree&, std::span<const float>,
                                                    std::span<const float>, std::int64_t,
                                                    WorkCounters*);
extern template std::vector<double> propagate<double>(const SpanningTree&, std::span<const double>,
                                                      std::span<const double>, std::int64_t,
                                                      WorkCounters*);
extern template FilterCacheT<float> forward<float>(const SpanningTree&, std::span<const float>,
                                                   std::span<const float>, std::int64_t);
extern template FilterCacheT<double> forward<double>(const SpanningTree&, std::span<const double>,
                                                     std::span<const double>, std::int64_t);

} // namespace treefilter
