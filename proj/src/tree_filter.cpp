#include "treefilter/tree_filter.hpp"

#include <cmath>
#include <string>

namespace treefilter {

namespace {

void check_plane_shape(const SpanningTree& tree, std::size_t similarity_len,
                       std::size_t values_len, std::int64_t channels, const char* what) {
  const auto n = static_cast<std::size_t>(tree.vertex_count);
  if (channels < 1) {
    fail(ErrorKind::dimension, std::string(what) + ": channel count must be positive");
  }
  if (similarity_len != n) {
    fail(ErrorKind::dimension, std::string(what) + ": similarity has " +
                                   std::to_string(similarity_len) + " entries for " +
                                   std::to_string(n) + " vertices");
  }
  if (values_len != n * static_cast<std::size_t>(channels)) {
    fail(ErrorKind::dimension, std::string(what) + ": values buffer holds " +
                                   std::to_string(values_len) + " entries, expected " +
                                   std::to_string(n * channels));
  }
}

} // namespace

EdgeSimilarity edge_similarity(const SpanningTree& tree) {
  return edge_similarity(tree.parent_weight, tree.root);
}

EdgeSimilarity edge_similarity(std::span<const double> parent_omega, std::int64_t root) {
  EdgeSimilarity sim;
  sim.values.resize(parent_omega.size());
  for (std::size_t v = 0; v < parent_omega.size(); ++v) {
    const double omega = parent_omega[v];
    if (!std::isfinite(omega)) {
      fail(ErrorKind::validation, "dissimilarity at vertex " + std::to_string(v) +
                                      " is not finite");
    }
    // Clamp keeps S in (0, 1] even for caller-supplied weights.
    sim.values[v] = std::exp(-std::max(omega, 0.0));
  }
  if (root >= 0 && root < static_cast<std::int64_t>(sim.values.size())) {
    sim.values[root] = 1.0;
  }
  return sim;
}

template <class Scalar>
std::vector<Scalar> aggregate(const SpanningTree& tree, std::span<const Scalar> similarity,
                              std::span<const Scalar> values, std::int64_t channels,
                              WorkCounters* counters) {
  check_plane_shape(tree, similarity.size(), values.size(), channels, "aggregate");
  const std::int64_t n = tree.vertex_count;
  std::vector<Scalar> out(values.begin(), values.end());

  // Deepest bucket first: every child is final before its parent's bucket runs.
  for (std::int64_t d = tree.depth_levels() - 1; d >= 1; --d) {
    for (const std::int64_t v : tree.level(d)) {
      const std::int64_t p = tree.parent[v];
      const Scalar s = similarity[v];
      for (std::int64_t c = 0; c < channels; ++c) {
        out[c * n + p] += s * out[c * n + v];
      }
    }
  }
  if (counters) counters->vertex_visits += static_cast<std::uint64_t>(n);
  return out;
}

template <class Scalar>
std::vector<Scalar> propagate(const SpanningTree& tree, std::span<const Scalar> similarity,
                              std::span<const Scalar> aggregated, std::int64_t channels,
                              WorkCounters* counters) {
  check_plane_shape(tree, similarity.size(), aggregated.size(), channels, "propagate");
  const std::int64_t n = tree.vertex_count;
  std::vector<Scalar> out(aggregated.size());

  for (std::int64_t c = 0; c < channels; ++c) {
    out[c * n + tree.root] = aggregated[c * n + tree.root];
  }
  for (std::int64_t d = 1; d < tree.depth_levels(); ++d) {
    for (const std::int64_t v : tree.level(d)) {
      const std::int64_t p = tree.parent[v];
      const Scalar s = similarity[v];
      const Scalar blend = Scalar(1) - s * s;
      for (std::int64_t c = 0; c < channels; ++c) {
        out[c * n + v] = s * out[c * n + p] + blend * aggregated[c * n + v];
      }
    }
  }
  if (counters) counters->vertex_visits += static_cast<std::uint64_t>(n);
  return out;
}

template <class Scalar>
FilterCacheT<Scalar> forward(const SpanningTree& tree, std::span<const Scalar> similarity,
                             std::span<const Scalar> input, std::int64_t channels) {
  check_plane_shape(tree, similarity.size(), input.size(), channels, "forward");
  const std::int64_t n = tree.vertex_count;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (!std::isfinite(input[i])) {
      fail(ErrorKind::validation, "input contains a non-finite value at flat index " +
                                      std::to_string(i));
    }
  }

  // The input planes and the all-ones normalization plane share each pass, so
  // one forward is exactly one aggregate visit plus one propagate visit per
  // vertex.
  std::vector<Scalar> stacked(static_cast<std::size_t>(channels + 1) * n, Scalar(1));
  std::copy(input.begin(), input.end(), stacked.begin());

  FilterCacheT<Scalar> cache;
  cache.channels = channels;
  cache.vertex_count = n;

  std::vector<Scalar> aggregated = aggregate<Scalar>(tree, similarity, stacked, channels + 1,
                                                     &cache.counters);
  std::vector<Scalar> propagated = propagate<Scalar>(tree, similarity, aggregated, channels + 1,
                                                     &cache.counters);

  const auto plane_len = static_cast<std::size_t>(channels) * n;
  cache.aggregated.assign(aggregated.begin(), aggregated.begin() + plane_len);
  cache.aggregated_ones.assign(aggregated.begin() + plane_len, aggregated.end());
  cache.unnormalized.assign(propagated.begin(), propagated.begin() + plane_len);
  cache.normalization.assign(propagated.begin() + plane_len, propagated.end());

  cache.output.resize(plane_len);
  for (std::int64_t c = 0; c < channels; ++c) {
    for (std::int64_t v = 0; v < n; ++v) {
      cache.output[c * n + v] = cache.unnormalized[c * n + v] / cache.normalization[v];
    }
  }
  return cache;
}

Gradients backward(const SpanningTree& tree, std::span<const double> similarity,
                   const FilterCache& cache, std::span<const double> output_grad,
                   std::int64_t channels, WorkCounters* counters) {
  check_plane_shape(tree, similarity.size(), output_grad.size(), channels, "backward");
  const std::int64_t n = tree.vertex_count;
  const auto plane = static_cast<std::size_t>(channels) * n;
  if (cache.channels != channels || cache.vertex_count != n ||
      cache.output.size() != plane || cache.aggregated.size() != plane ||
      cache.unnormalized.size() != plane ||
      cache.normalization.size() != static_cast<std::size_t>(n) ||
      cache.aggregated_ones.size() != static_cast<std::size_t>(n)) {
    fail(ErrorKind::state, "forward cache does not match this tree/input shape");
  }

  // Stack phi/z and phi*y/z so both gradient carriers ride one pass each.
  std::vector<double> stacked(2 * plane);
  for (std::int64_t c = 0; c < channels; ++c) {
    for (std::int64_t v = 0; v < n; ++v) {
      const double g = output_grad[c * n + v] / cache.normalization[v];
      stacked[c * n + v] = g;
      stacked[plane + c * n + v] = g * cache.output[c * n + v];
    }
  }

  std::vector<double> hat = aggregate<double>(tree, similarity, stacked, 2 * channels, counters);
  std::vector<double> prop = propagate<double>(tree, similarity, hat, 2 * channels, counters);

  Gradients grads;
  grads.input.assign(prop.begin(), prop.begin() + plane);
  grads.edge_weight.assign(n, 0.0);

  // dloss/domega for the edge (v, parent(v)). Splitting the tree at that edge
  // gives, per channel,
  //   gamma_s = psi_hat_v * rho_p + psi_p * rho_hat_v - 2 S psi_hat_v * rho_hat_v
  // (subtree aggregates at v paired with full-tree sums at the parent; the
  // cross terms remove the double-counted own-side contributions), gamma_z the
  // same with the nu/z carriers, and dloss/domega = dS/domega * (gamma_s -
  // gamma_z) with dS/domega = -S.
  for (std::int64_t v = 0; v < n; ++v) {
    if (v == tree.root) continue;
    const std::int64_t p = tree.parent[v];
    const double s = similarity[v];
    const double z_hat = cache.aggregated_ones[v];
    const double z_parent = cache.normalization[p];
    double unnormalized_term = 0.0;
    double normalization_term = 0.0;
    for (std::int64_t c = 0; c < channels; ++c) {
      const double psi_hat = hat[c * n + v];
      const double psi_parent = prop[c * n + p];
      const double nu_hat = hat[plane + c * n + v];
      const double nu_parent = prop[plane + c * n + p];
      const double rho_hat = cache.aggregated[c * n + v];
      const double rho_parent = cache.unnormalized[c * n + p];
      unnormalized_term +=
          psi_hat * rho_parent + psi_parent * rho_hat - 2.0 * s * psi_hat * rho_hat;
      normalization_term +=
          nu_hat * z_parent + nu_parent * z_hat - 2.0 * s * nu_hat * z_hat;
    }
    grads.edge_weight[v] = -s * (unnormalized_term - normalization_term);
  }
  return grads;
}

std::vector<double> affinity_map(const SpanningTree& tree, std::span<const double> similarity,
                                 std::int64_t query) {
  const std::int64_t n = tree.vertex_count;
  if (similarity.size() != static_cast<std::size_t>(n)) {
    fail(ErrorKind::dimension, "similarity entry count does not match the tree");
  }
  if (query < 0 || query >= n) {
    fail(ErrorKind::validation, "query vertex " + std::to_string(query) + " outside [0, " +
                                    std::to_string(n) + ")");
  }

  // Path distances are assembled from per-vertex root distances and the
  // path's topmost vertex: d(q, j) = rd[q] + rd[j] - 2 rd[top]. The two
  // root distances commute, so the result is bit-identical when query and
  // target swap roles.
  std::vector<double> root_dist(n, 0.0);
  for (std::int64_t i = 1; i < n; ++i) {
    const std::int64_t v = tree.bfs_order[i];
    // A similarity that underflowed to 0 acts as a huge finite distance so
    // sums along the path never produce inf - inf.
    const double omega = similarity[v] > 0.0 ? -std::log(similarity[v]) : 1e300;
    root_dist[v] = root_dist[tree.parent[v]] + std::max(omega, 0.0);
  }

  std::vector<double> out(n, 0.0);
  std::vector<char> visited(n, 0);
  out[query] = 1.0;
  visited[query] = 1;
  // (vertex, topmost vertex on the path back to query)
  std::vector<std::pair<std::int64_t, std::int64_t>> stack{{query, query}};
  while (!stack.empty()) {
    const auto [v, top] = stack.back();
    stack.pop_back();
    const auto reach = [&](std::int64_t w, std::int64_t w_top) {
      if (visited[w]) return;
      visited[w] = 1;
      const double d = std::max((root_dist[query] + root_dist[w]) - 2.0 * root_dist[w_top], 0.0);
      out[w] = std::exp(-d);
      stack.emplace_back(w, w_top);
    };
    const std::int64_t p = tree.parent[v];
    if (p != -1) reach(p, p); // stepping up moves the path's topmost vertex
    for (const std::int64_t c : tree.children(v)) reach(c, top);
  }
  return out;
}

FeatureMap grouped_filter(const FeatureMap& guidance, const FeatureMap& embedding,
                          const FeatureMap& input, const GroupedFilterOptions& options) {
  guidance.validate();
  embedding.validate();
  input.validate();
  if (guidance.height != input.height || guidance.width != input.width ||
      embedding.height != input.height || embedding.width != input.width) {
    fail(ErrorKind::dimension, "guidance, embedding, and input must share H x W");
  }
  if (options.groups < 1) {
    fail(ErrorKind::grouping, "group count must be positive");
  }
  if (embedding.channels % options.groups != 0 || input.channels % options.groups != 0) {
    fail(ErrorKind::grouping, "groups=" + std::to_string(options.groups) +
                                  " must divide embedding channels (" +
                                  std::to_string(embedding.channels) +
                                  ") and input channels (" +
                                  std::to_string(input.channels) + ")");
  }

  // The guidance dissimilarities decide the MST topology only; every group
  // re-derives its own edge weights from its embedding block.
  PlanarGraph graph = pairwise_dissimilarity(
      guidance, build_planar_graph(input.height, input.width), options.scale);
  const std::vector<std::int64_t> mst = boruvka_mst(graph);
  const std::int64_t n = input.vertex_count();
  const SpanningTree tree = root_tree(mst, graph, sample_root(n, options.seed));

  const int emb_per_group = embedding.channels / options.groups;
  const int in_per_group = input.channels / options.groups;

  FeatureMap out(input.channels, input.height, input.width);
  std::vector<double> omega(n);
  for (int g = 0; g < options.groups; ++g) {
    omega.assign(n, 0.0);
    const int c0 = g * emb_per_group;
    const int c1 = c0 + emb_per_group;
    for (std::int64_t v = 0; v < n; ++v) {
      if (v == tree.root) continue;
      omega[v] = embedding_distance(embedding, v, tree.parent[v], c0, c1, options.scale);
    }
    const EdgeSimilarity sim = edge_similarity(omega, tree.root);

    const std::size_t block = static_cast<std::size_t>(g) * in_per_group * n;
    const std::span<const double> x_block{input.data.data() + block,
                                          static_cast<std::size_t>(in_per_group) * n};
    const FilterCache cache = forward<double>(tree, sim.values, x_block, in_per_group);
    std::copy(cache.output.begin(), cache.output.end(), out.data.begin() + block);
  }

  if (options.residual) {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += input.data[i];
  }
  return out;
}

template std::vector<float> aggregate<float>(const SpanningTree&, std::span<const float>,
                                             std::span<const float>, std::int64_t,
                                             WorkCounters*);
template std::vector<double> aggregate<double>(const SpanningTree&, std::span<const double>,
                                               std::span<const double>, std::int64_t,
                                               WorkCounters*);
template std::vector<float> propagate<float>(const SpanningTree&, std::span<const float>,
                                             std::span<const float>, std::int64_t,
                                             WorkCounters*);
template std::vector<double> propagate<double>(const SpanningTree&, std::span<const double>,
                                               std::span<const double>, std::int64_t,
                                               WorkCounters*);
template FilterCacheT<float> forward<float>(const SpanningTree&, std::span<const float>,
                                            std::span<const float>, std::int64_t);
template FilterCacheT<double> forward<double>(const SpanningTree&, std::span<const double>,
                                              std::span<const double>, std::int64_t);

} // namespace treefilter
