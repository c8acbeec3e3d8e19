#include <doctest.h>

#include "test_util.hpp"
#include "treefilter/gradcheck.hpp"

using namespace treefilter;

TEST_CASE("gradcheck passes on healthy kernels") {
  GradcheckConfig config;
  config.grid_height = 8;
  config.grid_width = 8;
  config.channels = 2;
  config.instances = 4;
  config.seed = 17;
  const GradcheckReport report = run_gradcheck(config);
  CHECK(report.pass);
  CHECK(report.instances_run == 4);
  CHECK(report.max_forward_rel <= config.forward_rel_tol);
  CHECK(report.max_backward_rel <= config.backward_rel_tol);
  CHECK(report.max_fd_abs <= config.fd_abs_tol);
}

TEST_CASE("gradcheck report bytes are deterministic") {
  GradcheckConfig config;
  config.grid_height = 6;
  config.grid_width = 5;
  config.channels = 2;
  config.instances = 2;
  config.seed = 5;
  const std::string a = gradcheck_report_json(run_gradcheck(config));
  const std::string b = gradcheck_report_json(run_gradcheck(config));
  CHECK(a == b);
  CHECK(a.find("\"schema_version\"") != std::string::npos);
}

TEST_CASE("a corrupted propagation blend trips the checker") {
  GradcheckConfig config;
  config.grid_height = 6;
  config.grid_width = 6;
  config.channels = 2;
  config.instances = 2;
  config.seed = 3;
  config.corrupt_blend = true;
  const GradcheckReport report = run_gradcheck(config);
  CHECK_FALSE(report.pass);
  CHECK(report.max_forward_rel > config.forward_rel_tol);
}

TEST_CASE("gradcheck rejects oversized grids") {
  GradcheckConfig config;
  config.grid_height = 65;
  try {
    run_gradcheck(config);
    FAIL("expected a size error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::size);
  }
}
