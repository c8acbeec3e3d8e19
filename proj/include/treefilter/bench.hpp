#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace treefilter {

struct BenchRecord {
  std::int64_t vertices = 0;
  int height = 0;
  int width = 0;
  std::int64_t channels = 0;
  double dp_forward_ms = 0.0;
  double dp_backward_ms = 0.0;
  std::optional<double> brute_forward_ms; // absent above the brute size cutoff
  std::uint64_t dp_forward_visits = 0;    // 2N per forward
  std::uint64_t brute_similarity_evals = 0;
};

struct BenchReport {
  int schema_version = 1;
  int repetitions = 0;
  int warmup = 0;
  std::int64_t channels = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string build_profile;
  std::vector<BenchRecord> records;          // sorted by vertex count
  double dp_forward_slope = 0.0;             // log-log fit of time vs N
  double dp_backward_slope = 0.0;
  std::optional<double> brute_forward_slope; // absent when < 2 brute sizes ran
};

struct BenchConfig {
  std::vector<std::int64_t> sizes; // ascending vertex counts
  std::int64_t channels = 4;
  int repetitions = 5; // must be >= 5
  int warmup = 2;      // must be >= 2
  std::uint64_t seed = 0;
  std::int64_t brute_limit = 4096; // largest N the quadratic path runs at
  double timing_floor_ms = 0.0;    // 0 = derive from the measured clock resolution
};

// Builds a random weighted grid per size, times the DP forward/backward and
// the dense reference forward (median over repetitions, after warmup), and
// fits log-log slopes. Sizes whose runs land under the timer's resolution are
// rejected with guidance to raise the repetition count.
BenchReport run_scaling_benchmark(const BenchConfig& config);

// Machine-readable report; schema carries a version field.
std::string bench_report_json(const BenchReport& report);

} // namespace treefilter
