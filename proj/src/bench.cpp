#include "treefilter/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <json.hpp>

#include "treefilter/reference_oracle.hpp"
#include "treefilter/rng.hpp"
#include "treefilter/tree_filter.hpp"

namespace treefilter {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point begin, Clock::time_point end) {
  return std::chrono::duration<double, std::milli>(end - begin).count();
}

// Smallest positive tick the clock can resolve, sampled empirically.
double timer_resolution_ms() {
  double best = 1.0;
  for (int i = 0; i < 512; ++i) {
    const auto a = Clock::now();
    auto b = Clock::now();
    while (b == a) b = Clock::now();
    best = std::min(best, elapsed_ms(a, b));
  }
  return best;
}

double median(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t m = samples.size() / 2;
  if (samples.size() % 2 == 1) return samples[m];
  return 0.5 * (samples[m - 1] + samples[m]);
}

// Largest divisor of n not exceeding sqrt(n); keeps benchmark grids close to
// square whenever the size allows it.
std::int64_t grid_height_for(std::int64_t n) {
  std::int64_t best = 1;
  for (std::int64_t h = 1; h * h <= n; ++h) {
    if (n % h == 0) best = h;
  }
  return best;
}

double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  const double count = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += std::log(x);
    mean_y += std::log(y);
  }
  mean_x /= count;
  mean_y /= count;
  double cov = 0.0, var = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mean_x;
    cov += dx * (std::log(y) - mean_y);
    var += dx * dx;
  }
  return cov / var;
}

} // namespace

BenchReport run_scaling_benchmark(const BenchConfig& config) {
  if (config.sizes.empty()) {
    fail(ErrorKind::validation, "benchmark needs at least one size");
  }
  if (!std::is_sorted(config.sizes.begin(), config.sizes.end())) {
    fail(ErrorKind::validation, "benchmark sizes must be ascending");
  }
  if (config.sizes.front() < 2) {
    fail(ErrorKind::validation, "benchmark sizes must be at least 2 vertices");
  }
  if (config.repetitions < 5) {
    fail(ErrorKind::validation, "benchmark needs at least 5 repetitions");
  }
  if (config.warmup < 2) {
    fail(ErrorKind::validation, "benchmark needs at least 2 warmup runs");
  }
  if (config.channels < 1) {
    fail(ErrorKind::validation, "benchmark needs at least one channel");
  }

  // Below this, single-call timings are dominated by clock granularity.
  const double floor_ms = config.timing_floor_ms > 0.0
                              ? config.timing_floor_ms
                              : std::max(100.0 * timer_resolution_ms(), 1e-3);

#if defined(__GLIBC__)
  // Keep large scratch buffers on the reusable heap; per-call mmap/munmap
  // would charge a page-fault sweep to every repetition and skew the slopes.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
#endif

  BenchReport report;
  report.repetitions = config.repetitions;
  report.warmup = config.warmup;
  report.channels = config.channels;
  report.seed = config.seed;
  report.threads = 1; // kernels run sequentially
#ifdef NDEBUG
  report.build_profile = "release";
#else
  report.build_profile = "debug";
#endif

  SplitMix64 rng(config.seed);
  for (const std::int64_t n : config.sizes) {
    const std::int64_t height = grid_height_for(n);
    const std::int64_t width = n / height;

    PlanarGraph graph =
        build_planar_graph(static_cast<int>(height), static_cast<int>(width));
    graph.weights.resize(graph.edges.size());
    for (double& w : graph.weights) w = rng.uniform(0.05, 2.5);
    const SpanningTree tree = root_tree(boruvka_mst(graph), graph, sample_root(n, config.seed));
    const EdgeSimilarity sim = edge_similarity(tree);

    std::vector<double> x(static_cast<std::size_t>(config.channels) * n);
    for (double& value : x) value = rng.uniform(-1.0, 1.0);
    std::vector<double> phi(x.size());
    for (double& value : phi) value = rng.uniform(-1.0, 1.0);

    BenchRecord record;
    record.vertices = n;
    record.height = static_cast<int>(height);
    record.width = static_cast<int>(width);
    record.channels = config.channels;
    record.dp_forward_visits = 2 * static_cast<std::uint64_t>(n);

    FilterCache cache;
    for (int i = 0; i < config.warmup; ++i) {
      cache = forward<double>(tree, sim.values, x, config.channels);
    }
    std::vector<double> forward_times, backward_times;
    for (int i = 0; i < config.repetitions; ++i) {
      const auto begin = Clock::now();
      cache = forward<double>(tree, sim.values, x, config.channels);
      forward_times.push_back(elapsed_ms(begin, Clock::now()));
    }
    for (int i = 0; i < config.warmup; ++i) {
      (void)backward(tree, sim.values, cache, phi, config.channels);
    }
    for (int i = 0; i < config.repetitions; ++i) {
      const auto begin = Clock::now();
      (void)backward(tree, sim.values, cache, phi, config.channels);
      backward_times.push_back(elapsed_ms(begin, Clock::now()));
    }
    record.dp_forward_ms = median(forward_times);
    record.dp_backward_ms = median(backward_times);

    if (record.dp_forward_ms < floor_ms) {
      fail(ErrorKind::validation,
           "size " + std::to_string(n) + " runs in " + std::to_string(record.dp_forward_ms) +
               " ms, under the " + std::to_string(floor_ms) +
               " ms timing floor; raise repetitions and use larger sizes");
    }

    if (n <= config.brute_limit) {
      WorkCounters counters;
      std::vector<double> brute_times;
      for (int i = 0; i < config.warmup; ++i) {
        (void)brute_forward(tree, tree.parent_weight, x, config.channels);
      }
      for (int i = 0; i < config.repetitions; ++i) {
        const auto begin = Clock::now();
        (void)brute_forward(tree, tree.parent_weight, x, config.channels,
                            i == 0 ? &counters : nullptr);
        brute_times.push_back(elapsed_ms(begin, Clock::now()));
      }
      record.brute_forward_ms = median(brute_times);
      record.brute_similarity_evals = counters.similarity_evaluations;
    }
    report.records.push_back(record);
  }

  std::vector<std::pair<double, double>> dp_fwd, dp_bwd, brute;
  for (const BenchRecord& r : report.records) {
    dp_fwd.emplace_back(static_cast<double>(r.vertices), r.dp_forward_ms);
    dp_bwd.emplace_back(static_cast<double>(r.vertices), r.dp_backward_ms);
    if (r.brute_forward_ms) {
      brute.emplace_back(static_cast<double>(r.vertices), *r.brute_forward_ms);
    }
  }
  if (dp_fwd.size() >= 2) {
    report.dp_forward_slope = fit_loglog_slope(dp_fwd);
    report.dp_backward_slope = fit_loglog_slope(dp_bwd);
  }
  if (brute.size() >= 2) {
    report.brute_forward_slope = fit_loglog_slope(brute);
  }
  return report;
}

std::string bench_report_json(const BenchReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = report.schema_version;
  j["repetitions"] = report.repetitions;
  j["warmup"] = report.warmup;
  j["channels"] = report.channels;
  j["seed"] = report.seed;
  j["threads"] = report.threads;
  j["build_profile"] = report.build_profile;
  j["dp_forward_slope"] = report.dp_forward_slope;
  j["dp_backward_slope"] = report.dp_backward_slope;
  if (report.brute_forward_slope) {
    j["brute_forward_slope"] = *report.brute_forward_slope;
  } else {
    j["brute_forward_slope"] = nullptr;
  }
  j["records"] = nlohmann::ordered_json::array();
  for (const BenchRecord& r : report.records) {
    nlohmann::ordered_json rec;
    rec["vertices"] = r.vertices;
    rec["height"] = r.height;
    rec["width"] = r.width;
    rec["channels"] = r.channels;
    rec["dp_forward_ms"] = r.dp_forward_ms;
    rec["dp_backward_ms"] = r.dp_backward_ms;
    if (r.brute_forward_ms) {
      rec["brute_forward_ms"] = *r.brute_forward_ms;
      rec["brute_similarity_evals"] = r.brute_similarity_evals;
    } else {
      rec["brute_forward_ms"] = nullptr;
      rec["brute_similarity_evals"] = nullptr;
    }
    rec["dp_forward_visits"] = r.dp_forward_visits;
    j["records"].push_back(rec);
  }
  return j.dump(2) + "\n";
}

} // namespace treefilter
