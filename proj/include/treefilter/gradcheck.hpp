#pragma once

#include <cstdint>
#include <string>

namespace treefilter {

struct GradcheckConfig {
  int grid_height = 16; // each side capped at 64: the dense oracle is O(N^2)
  int grid_width = 16;
  int channels = 3;
  int instances = 20;
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
  double forward_rel_tol = 1e-9;  // DP forward vs dense reference
  double backward_rel_tol = 1e-9; // DP backward vs dense reference
  double fd_abs_tol = 1e-6;       // both vs central differences
  bool corrupt_blend = false;     // canary: mis-blends the propagation pass
};

struct GradcheckReport {
  int schema_version = 1;
  GradcheckConfig config;
  int instances_run = 0;
  double max_forward_rel = 0.0;
  double max_backward_rel = 0.0; // covers both input and edge-weight grads
  double max_fd_abs = 0.0;
  bool pass = false;
};

// Seeded random instances: random-weight grid -> MST -> random dissimilarities
// and features, then every gradient route compared pairwise. Deterministic for
// a fixed config, including the serialized report bytes.
GradcheckReport run_gradcheck(const GradcheckConfig& config);

std::string gradcheck_report_json(const GradcheckReport& report);

} // namespace treefilter
