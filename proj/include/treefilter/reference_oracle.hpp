#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "treefilter/spanning_tree.hpp"
#include "treefilter/tree_filter.hpp"

namespace treefilter {

// Fully materialized filter weights. similarity[i*n+j] = exp(-D(i,j)) where
// D sums dissimilarities along the tree path; normalization[i] is the row sum.
// Every row of weight() sums to 1 and normalization * weight is symmetric.
struct DenseFilterMatrix {
  std::int64_t n = 0;
  std::vector<double> similarity;    // n x n, row-major
  std::vector<double> normalization; // n

  double weight(std::int64_t i, std::int64_t j) const {
    return similarity[i * n + j] / normalization[i];
  }
};

// O(N^2) materialization by walking the tree outward from every vertex and
// summing path dissimilarities before exponentiating. Deliberately avoids the
// per-edge similarity products the DP passes use.
DenseFilterMatrix dense_filter_matrix(const SpanningTree& tree,
                                      std::span<const double> parent_omega,
                                      WorkCounters* counters = nullptr);

// Path dissimilarity sum between i and j via a lowest-common-ancestor walk.
double tree_path_distance(const SpanningTree& tree, std::span<const double> parent_omega,
                          std::int64_t i, std::int64_t j);

// Direct evaluation of the filter as an explicit weighted average. O(N^2)
// per channel; the reference every forward test trusts.
std::vector<double> brute_forward(const SpanningTree& tree, std::span<const double> parent_omega,
                                  std::span<const double> input, std::int64_t channels,
                                  WorkCounters* counters = nullptr);

// Direct evaluation of both gradient formulas by materializing the dense
// similarity matrix and per-edge subtree sums. O(N^2) per channel.
Gradients brute_backward(const SpanningTree& tree, std::span<const double> parent_omega,
                         std::span<const double> input, std::span<const double> output_grad,
                         std::int64_t channels);

using LossFn = std::function<double(std::span<const double> output, std::int64_t channels)>;

// Central differences of an arbitrary scalar loss with respect to every input
// entry and every tree-edge dissimilarity. Step must lie in [1e-7, 1e-3];
// everything runs in double precision.
Gradients finite_difference_grad(const SpanningTree& tree, std::span<const double> parent_omega,
                                 std::span<const double> input, std::int64_t channels,
                                 const LossFn& loss, double step = 1e-5);

} // namespace treefilter
