#include "treefilter/reference_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace treefilter {

namespace {

void check_vertex(const SpanningTree& tree, std::int64_t v, const char* what) {
  if (v < 0 || v >= tree.vertex_count) {
    fail(ErrorKind::validation, std::string(what) + " vertex " + std::to_string(v) +
                                    " outside [0, " + std::to_string(tree.vertex_count) + ")");
  }
}

void check_omega(const SpanningTree& tree, std::span<const double> parent_omega) {
  if (parent_omega.size() != static_cast<std::size_t>(tree.vertex_count)) {
    fail(ErrorKind::dimension, "parent dissimilarities must hold one entry per vertex");
  }
}

inline double clamped(double omega) { return std::max(omega, 0.0); }

// Per-vertex dissimilarity sum along the path up to the root.
std::vector<double> root_distances(const SpanningTree& tree,
                                   std::span<const double> parent_omega) {
  std::vector<double> rd(tree.vertex_count, 0.0);
  for (std::int64_t i = 1; i < tree.vertex_count; ++i) {
    const std::int64_t v = tree.bfs_order[i];
    rd[v] = rd[tree.parent[v]] + clamped(parent_omega[v]);
  }
  return rd;
}

// Path dissimilarities from `source` to every vertex, one tree walk. Each
// distance is rd[source] + rd[j] - 2 rd[top], with `top` the path's topmost
// vertex; the two root distances commute, so d(i, j) is bit-identical to
// d(j, i).
std::vector<double> distances_from(const SpanningTree& tree, std::span<const double> rd,
                                   std::int64_t source) {
  std::vector<double> dist(tree.vertex_count, 0.0);
  std::vector<char> visited(tree.vertex_count, 0);
  visited[source] = 1;
  std::vector<std::pair<std::int64_t, std::int64_t>> stack{{source, source}};
  while (!stack.empty()) {
    const auto [v, top] = stack.back();
    stack.pop_back();
    const auto reach = [&](std::int64_t w, std::int64_t w_top) {
      if (visited[w]) return;
      visited[w] = 1;
      dist[w] = std::max((rd[source] + rd[w]) - 2.0 * rd[w_top], 0.0);
      stack.emplace_back(w, w_top);
    };
    const std::int64_t p = tree.parent[v];
    if (p != -1) reach(p, p);
    for (const std::int64_t c : tree.children(v)) reach(c, top);
  }
  return dist;
}

// Subtree membership in O(1) per query: j is inside v's subtree iff
// tin[v] <= tin[j] < tout[v].
struct EulerIndex {
  std::vector<std::int64_t> tin;
  std::vector<std::int64_t> tout;

  explicit EulerIndex(const SpanningTree& tree)
      : tin(tree.vertex_count, -1), tout(tree.vertex_count, -1) {
    std::int64_t clock = 0;
    std::vector<std::pair<std::int64_t, bool>> stack{{tree.root, false}};
    while (!stack.empty()) {
      auto [v, exiting] = stack.back();
      stack.pop_back();
      if (exiting) {
        tout[v] = clock;
        continue;
      }
      tin[v] = clock++;
      stack.emplace_back(v, true);
      for (const std::int64_t c : tree.children(v)) stack.emplace_back(c, false);
    }
  }

  bool inside(std::int64_t subtree_root, std::int64_t j) const {
    return tin[subtree_root] <= tin[j] && tin[j] < tout[subtree_root];
  }
};

} // namespace

DenseFilterMatrix dense_filter_matrix(const SpanningTree& tree,
                                      std::span<const double> parent_omega,
                                      WorkCounters* counters) {
  check_omega(tree, parent_omega);
  const std::int64_t n = tree.vertex_count;
  DenseFilterMatrix dense;
  dense.n = n;
  dense.similarity.resize(static_cast<std::size_t>(n) * n);
  dense.normalization.resize(n);
  const std::vector<double> rd = root_distances(tree, parent_omega);
  for (std::int64_t i = 0; i < n; ++i) {
    const std::vector<double> dist = distances_from(tree, rd, i);
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const double s = std::exp(-dist[j]);
      dense.similarity[i * n + j] = s;
      z += s;
    }
    dense.normalization[i] = z;
  }
  if (counters) {
    counters->similarity_evaluations += static_cast<std::uint64_t>(n) * n;
  }
  return dense;
}

double tree_path_distance(const SpanningTree& tree, std::span<const double> parent_omega,
                          std::int64_t i, std::int64_t j) {
  check_omega(tree, parent_omega);
  check_vertex(tree, i, "path");
  check_vertex(tree, j, "path");
  // Depth-aligned ascent to the lowest common ancestor.
  double total = 0.0;
  while (tree.depth[i] > tree.depth[j]) {
    total += clamped(parent_omega[i]);
    i = tree.parent[i];
  }
  while (tree.depth[j] > tree.depth[i]) {
    total += clamped(parent_omega[j]);
    j = tree.parent[j];
  }
  while (i != j) {
    total += clamped(parent_omega[i]) + clamped(parent_omega[j]);
    i = tree.parent[i];
    j = tree.parent[j];
  }
  return total;
}

std::vector<double> brute_forward(const SpanningTree& tree, std::span<const double> parent_omega,
                                  std::span<const double> input, std::int64_t channels,
                                  WorkCounters* counters) {
  const std::int64_t n = tree.vertex_count;
  if (input.size() != static_cast<std::size_t>(channels) * n || channels < 1) {
    fail(ErrorKind::dimension, "input buffer does not match channels x vertices");
  }
  const DenseFilterMatrix dense = dense_filter_matrix(tree, parent_omega, counters);
  std::vector<double> out(input.size());
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        acc += dense.similarity[i * n + j] * input[c * n + j];
      }
      out[c * n + i] = acc / dense.normalization[i];
    }
  }
  return out;
}

Gradients brute_backward(const SpanningTree& tree, std::span<const double> parent_omega,
                         std::span<const double> input, std::span<const double> output_grad,
                         std::int64_t channels) {
  const std::int64_t n = tree.vertex_count;
  if (input.size() != static_cast<std::size_t>(channels) * n ||
      output_grad.size() != input.size() || channels < 1) {
    fail(ErrorKind::dimension, "input/output-grad buffers do not match channels x vertices");
  }
  const DenseFilterMatrix dense = dense_filter_matrix(tree, parent_omega);
  const std::vector<double>& a = dense.similarity;
  const std::vector<double>& z = dense.normalization;

  std::vector<double> y(input.size());
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) acc += a[i * n + j] * input[c * n + j];
      y[c * n + i] = acc / z[i];
    }
  }

  Gradients grads;
  grads.input.assign(input.size(), 0.0);
  grads.edge_weight.assign(n, 0.0);

  // dloss/dx_j = sum_i phi_i * S(E_{i,j}) / z_i, per channel.
  for (std::int64_t j = 0; j < n; ++j) {
    for (std::int64_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        acc += output_grad[c * n + i] * a[i * n + j] / z[i];
      }
      grads.input[c * n + j] = acc;
    }
  }

  // Per-edge gradient: removing edge (v, p) splits the vertices into v's
  // subtree and the rest; each output vertex i sees the far side through the
  // edge, with the subtree sums taken at the far endpoint.
  const EulerIndex euler(tree);
  std::vector<double> far_feature(channels);
  std::vector<double> near_feature(channels);
  for (std::int64_t v = 0; v < n; ++v) {
    if (v == tree.root) continue;
    const std::int64_t p = tree.parent[v];
    const double edge_sim = std::exp(-clamped(parent_omega[v]));

    std::fill(far_feature.begin(), far_feature.end(), 0.0);
    std::fill(near_feature.begin(), near_feature.end(), 0.0);
    double far_ones = 0.0;  // sum_{j in sub(v)} S(E_{v,j})
    double near_ones = 0.0; // sum_{j outside sub(v)} S(E_{p,j})
    for (std::int64_t j = 0; j < n; ++j) {
      if (euler.inside(v, j)) {
        far_ones += a[v * n + j];
        for (std::int64_t c = 0; c < channels; ++c) {
          far_feature[c] += a[v * n + j] * input[c * n + j];
        }
      } else {
        near_ones += a[p * n + j];
        for (std::int64_t c = 0; c < channels; ++c) {
          near_feature[c] += a[p * n + j] * input[c * n + j];
        }
      }
    }

    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const bool i_inside = euler.inside(v, i);
      // Endpoint on i's side of the edge, and the subtree sums beyond it.
      const double reach = i_inside ? a[i * n + v] : a[i * n + p];
      const std::vector<double>& feature = i_inside ? near_feature : far_feature;
      const double ones = i_inside ? near_ones : far_ones;
      double dot = 0.0;
      for (std::int64_t c = 0; c < channels; ++c) {
        dot += output_grad[c * n + i] * (feature[c] - y[c * n + i] * ones);
      }
      acc += (reach / z[i]) * dot;
    }
    grads.edge_weight[v] = -edge_sim * acc;
  }
  return grads;
}

Gradients finite_difference_grad(const SpanningTree& tree, std::span<const double> parent_omega,
                                 std::span<const double> input, std::int64_t channels,
                                 const LossFn& loss, double step) {
  check_omega(tree, parent_omega);
  const std::int64_t n = tree.vertex_count;
  if (input.size() != static_cast<std::size_t>(channels) * n || channels < 1) {
    fail(ErrorKind::dimension, "input buffer does not match channels x vertices");
  }
  if (!(step >= 1e-7 && step <= 1e-3)) {
    fail(ErrorKind::validation, "finite-difference step must lie in [1e-7, 1e-3]");
  }

  std::vector<double> x(input.begin(), input.end());
  std::vector<double> omega(parent_omega.begin(), parent_omega.end());

  const auto loss_at = [&]() {
    const EdgeSimilarity sim = edge_similarity(omega, tree.root);
    const FilterCache cache = forward<double>(tree, sim.values, x, channels);
    const double value = loss(cache.output, channels);
    if (!std::isfinite(value)) {
      fail(ErrorKind::validation, "loss functional returned a non-finite value");
    }
    return value;
  };

  Gradients grads;
  grads.input.resize(x.size());
  grads.edge_weight.assign(n, 0.0);

  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = loss_at();
    x[i] = saved - step;
    const double down = loss_at();
    x[i] = saved;
    grads.input[i] = (up - down) / (2.0 * step);
  }

  for (std::int64_t v = 0; v < n; ++v) {
    if (v == tree.root) continue;
    const double saved = omega[v];
    omega[v] = saved + step;
    const double up = loss_at();
    omega[v] = saved - step;
    const double down = loss_at();
    omega[v] = saved;
    grads.edge_weight[v] = (up - down) / (2.0 * step);
  }
  return grads;
}

} // namespace treefilter
