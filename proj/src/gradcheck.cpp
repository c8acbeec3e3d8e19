#include "treefilter/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "treefilter/reference_oracle.hpp"
#include "treefilter/rng.hpp"
#include "treefilter/tree_filter.hpp"

namespace treefilter {

namespace {

// Relative deviation with a small-magnitude floor: entries whose true value
// sits below the floor are judged absolutely, which keeps exact-cancellation
// zeros from reporting unbounded relative error.
double rel_deviation(double a, double b) {
  constexpr double floor = 1e-2;
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_rel_deviation(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, rel_deviation(a[i], b[i]));
  }
  return worst;
}

double max_abs_deviation(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

// Compensated sum keeps the loss evaluations accurate enough that the
// finite-difference quotient stays well under the 1e-6 band.
double weighted_sum(std::span<const double> weights, std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double term = weights[i] * values[i] - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum;
}

// Canary path: same aggregation, but the propagation blends with (1 - S)
// instead of (1 - S^2). Used only to prove the checker notices a broken
// kernel.
std::vector<double> corrupted_forward(const SpanningTree& tree, std::span<const double> sim,
                                      std::span<const double> input, std::int64_t channels) {
  const std::int64_t n = tree.vertex_count;
  std::vector<double> stacked(static_cast<std::size_t>(channels + 1) * n, 1.0);
  std::copy(input.begin(), input.end(), stacked.begin());
  const std::vector<double> aggregated =
      aggregate<double>(tree, sim, stacked, channels + 1);

  std::vector<double> prop(stacked.size());
  for (std::int64_t c = 0; c <= channels; ++c) {
    prop[c * n + tree.root] = aggregated[c * n + tree.root];
  }
  for (std::int64_t d = 1; d < tree.depth_levels(); ++d) {
    for (const std::int64_t v : tree.level(d)) {
      const double s = sim[v];
      for (std::int64_t c = 0; c <= channels; ++c) {
        prop[c * n + v] = s * prop[c * n + tree.parent[v]] +
                          (1.0 - s) * aggregated[c * n + v];
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(channels) * n);
  for (std::int64_t c = 0; c < channels; ++c) {
    for (std::int64_t v = 0; v < n; ++v) {
      out[c * n + v] = prop[c * n + v] / prop[channels * n + v];
    }
  }
  return out;
}

} // namespace

GradcheckReport run_gradcheck(const GradcheckConfig& config) {
  if (config.grid_height < 1 || config.grid_width < 1 || config.grid_height > 64 ||
      config.grid_width > 64 ||
      static_cast<std::int64_t>(config.grid_height) * config.grid_width < 2) {
    fail(ErrorKind::size,
         "gradcheck grid sides must stay within 64 (the dense reference is quadratic)");
  }
  if (config.instances < 1) {
    fail(ErrorKind::validation, "gradcheck needs at least one instance");
  }
  if (config.channels < 1) {
    fail(ErrorKind::validation, "gradcheck needs at least one channel");
  }

  const std::int64_t n = static_cast<std::int64_t>(config.grid_height) * config.grid_width;
  const std::int64_t channels = config.channels;
  SplitMix64 rng(config.seed);

  GradcheckReport report;
  report.config = config;

  for (int instance = 0; instance < config.instances; ++instance) {
    PlanarGraph graph = build_planar_graph(config.grid_height, config.grid_width);
    graph.weights.resize(graph.edges.size());
    for (double& w : graph.weights) w = rng.uniform(0.05, 2.5);

    const std::vector<std::int64_t> mst = boruvka_mst(graph);
    const SpanningTree tree = root_tree(mst, graph, rng.below(n));

    std::vector<double> omega(n, 0.0);
    for (std::int64_t v = 0; v < n; ++v) {
      if (v != tree.root) omega[v] = rng.uniform(0.05, 2.5);
    }
    std::vector<double> x(static_cast<std::size_t>(channels) * n);
    for (double& value : x) value = rng.uniform(-2.0, 2.0);
    std::vector<double> phi(x.size());
    for (double& value : phi) value = rng.uniform(-1.0, 1.0);

    const EdgeSimilarity sim = edge_similarity(omega, tree.root);
    const FilterCache cache = forward<double>(tree, sim.values, x, channels);
    const std::vector<double> dp_output =
        config.corrupt_blend ? corrupted_forward(tree, sim.values, x, channels) : cache.output;

    const std::vector<double> reference = brute_forward(tree, omega, x, channels);
    report.max_forward_rel =
        std::max(report.max_forward_rel, max_rel_deviation(dp_output, reference));

    const Gradients dp = backward(tree, sim.values, cache, phi, channels);
    const Gradients brute = brute_backward(tree, omega, x, phi, channels);
    report.max_backward_rel =
        std::max({report.max_backward_rel, max_rel_deviation(dp.input, brute.input),
                  max_rel_deviation(dp.edge_weight, brute.edge_weight)});

    const LossFn loss = [&phi](std::span<const double> output, std::int64_t) {
      return weighted_sum(phi, output);
    };
    const Gradients fd =
        finite_difference_grad(tree, omega, x, channels, loss, config.fd_step);
    report.max_fd_abs = std::max({report.max_fd_abs,
                                  max_abs_deviation(dp.input, fd.input),
                                  max_abs_deviation(dp.edge_weight, fd.edge_weight),
                                  max_abs_deviation(brute.input, fd.input),
                                  max_abs_deviation(brute.edge_weight, fd.edge_weight)});
    ++report.instances_run;
  }

  report.pass = report.max_forward_rel <= config.forward_rel_tol &&
                report.max_backward_rel <= config.backward_rel_tol &&
                report.max_fd_abs <= config.fd_abs_tol;
  return report;
}

std::string gradcheck_report_json(const GradcheckReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = report.schema_version;
  j["config"] = {
      {"grid_height", report.config.grid_height},
      {"grid_width", report.config.grid_width},
      {"channels", report.config.channels},
      {"instances", report.config.instances},
      {"seed", report.config.seed},
      {"fd_step", report.config.fd_step},
      {"forward_rel_tol", report.config.forward_rel_tol},
      {"backward_rel_tol", report.config.backward_rel_tol},
      {"fd_abs_tol", report.config.fd_abs_tol},
      {"corrupt_blend", report.config.corrupt_blend},
  };
  j["instances_run"] = report.instances_run;
  j["max_forward_rel"] = report.max_forward_rel;
  j["max_backward_rel"] = report.max_backward_rel;
  j["max_fd_abs"] = report.max_fd_abs;
  j["pass"] = report.pass;
  return j.dump(2) + "\n";
}

} // namespace treefilter
