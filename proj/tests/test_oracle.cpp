#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "treefilter/reference_oracle.hpp"

using namespace treefilter;
using tftest::max_abs_dev;
using tftest::max_rel_dev;

TEST_CASE("tree path distance") {
  const PlanarGraph g = tftest::path_graph({std::log(2.0), std::log(2.0)});
  const SpanningTree t = root_tree(std::vector<std::int64_t>{0, 1}, g, 1);

  CHECK(tree_path_distance(t, t.parent_weight, 0, 0) == 0.0);
  CHECK(tree_path_distance(t, t.parent_weight, 2, 2) == 0.0);
  CHECK(tree_path_distance(t, t.parent_weight, 0, 2) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(tree_path_distance(t, t.parent_weight, 0, 2) ==
        tree_path_distance(t, t.parent_weight, 2, 0));

  SUBCASE("constant dissimilarity degenerates to hop count") {
    SplitMix64 rng(71);
    const PlanarGraph grid = tftest::random_weighted_grid(4, 5, rng);
    const SpanningTree tree = root_tree(boruvka_mst(grid), grid, 3);
    std::vector<double> omega(tree.vertex_count, 0.7);
    omega[tree.root] = 0.0;
    for (std::int64_t i = 0; i < tree.vertex_count; ++i) {
      for (std::int64_t j = 0; j < tree.vertex_count; ++j) {
        const double d = tree_path_distance(tree, omega, i, j);
        const double hops = std::round(d / 0.7);
        CHECK(d == doctest::Approx(hops * 0.7).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("dense filter matrix invariants") {
  SplitMix64 rng(73);
  const tftest::Instance inst = tftest::random_instance(6, 6, 1, rng);
  const std::int64_t n = inst.tree.vertex_count;
  WorkCounters counters;
  const DenseFilterMatrix dense = dense_filter_matrix(inst.tree, inst.omega, &counters);

  CHECK(counters.similarity_evaluations == static_cast<std::uint64_t>(n) * n);

  for (std::int64_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      CHECK(dense.similarity[i * n + j] > 0.0);
      // unnormalized similarity is exactly symmetric
      CHECK(dense.similarity[i * n + j] == dense.similarity[j * n + i]);
      row += dense.weight(i, j);
    }
    CHECK(std::abs(row - 1.0) < 1e-12);
    CHECK(dense.similarity[i * n + i] == 1.0);
    CHECK(dense.normalization[i] >= 1.0);
  }

  SUBCASE("matrix distances agree with the LCA walk") {
    for (std::int64_t i = 0; i < n; i += 5) {
      for (std::int64_t j = 0; j < n; j += 3) {
        const double via_matrix = -std::log(dense.similarity[i * n + j]);
        const double via_walk = tree_path_distance(inst.tree, inst.omega, i, j);
        CHECK(std::abs(via_matrix - via_walk) < 1e-11);
      }
    }
  }
}

TEST_CASE("brute forward reference") {
  SUBCASE("single vertex passes through") {
    PlanarGraph g;
    g.height = 1;
    g.width = 1;
    g.weights = {};
    const SpanningTree t = root_tree({}, g, 0);
    const std::vector<double> omega{0.0};
    const std::vector<double> x{4.5};
    CHECK(brute_forward(t, omega, x, 1) == x);
  }

  SUBCASE("all-zero weights average the input") {
    PlanarGraph g = build_planar_graph(2, 3);
    g.weights.assign(g.edges.size(), 0.0);
    const SpanningTree t = root_tree(boruvka_mst(g), g, 0);
    const std::vector<double> x{1, 2, 3, 4, 5, 6};
    const auto y = brute_forward(t, t.parent_weight, x, 1);
    for (const double v : y) CHECK(v == doctest::Approx(3.5).epsilon(1e-14));
  }

  SUBCASE("matches the DP forward on random instances") {
    SplitMix64 rng(79);
    for (int round = 0; round < 25; ++round) {
      const int h = 2 + static_cast<int>(rng.below(7));
      const int w = 2 + static_cast<int>(rng.below(7));
      const tftest::Instance inst = tftest::random_instance(h, w, 3, rng);
      const FilterCache cache = forward<double>(inst.tree, inst.sim.values, inst.x, 3);
      const auto reference = brute_forward(inst.tree, inst.omega, inst.x, 3);
      CHECK(max_rel_dev(cache.output, reference) < 1e-9);
    }
  }
}

TEST_CASE("brute backward reference") {
  SplitMix64 rng(83);

  SUBCASE("zero output gradient") {
    const tftest::Instance inst = tftest::random_instance(3, 4, 2, rng);
    const std::vector<double> phi(inst.x.size(), 0.0);
    const Gradients g = brute_backward(inst.tree, inst.omega, inst.x, phi, 2);
    for (const double v : g.input) CHECK(v == 0.0);
    for (const double v : g.edge_weight) CHECK(v == 0.0);
  }

  SUBCASE("agrees with finite differences and the DP backward") {
    for (int round = 0; round < 6; ++round) {
      const int h = 2 + static_cast<int>(rng.below(5));
      const int w = 2 + static_cast<int>(rng.below(5));
      const tftest::Instance inst = tftest::random_instance(h, w, 2, rng);

      const Gradients brute =
          brute_backward(inst.tree, inst.omega, inst.x, inst.phi, 2);

      const FilterCache cache = forward<double>(inst.tree, inst.sim.values, inst.x, 2);
      const Gradients dp = backward(inst.tree, inst.sim.values, cache, inst.phi, 2);
      CHECK(max_rel_dev(dp.input, brute.input) < 1e-9);
      CHECK(max_rel_dev(dp.edge_weight, brute.edge_weight) < 1e-9);

      const LossFn loss = [&](std::span<const double> y, std::int64_t) {
        double total = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) total += inst.phi[i] * y[i];
        return total;
      };
      const Gradients fd =
          finite_difference_grad(inst.tree, inst.omega, inst.x, 2, loss, 1e-5);
      CHECK(max_abs_dev(brute.input, fd.input) < 1e-6);
      CHECK(max_abs_dev(brute.edge_weight, fd.edge_weight) < 1e-6);
    }
  }
}

TEST_CASE("finite difference oracle") {
  SplitMix64 rng(89);

  SUBCASE("quadratic loss on the identity filter recovers 2(x - target)") {
    PlanarGraph g = build_planar_graph(3, 3);
    g.weights.assign(g.edges.size(), 1e3); // similarity ~ 0: filter ~ identity
    const SpanningTree t = root_tree(boruvka_mst(g), g, 4);
    std::vector<double> x(9), target(9);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : target) v = rng.uniform(-1.0, 1.0);

    const LossFn loss = [&](std::span<const double> y, std::int64_t) {
      double total = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        total += (y[i] - target[i]) * (y[i] - target[i]);
      }
      return total;
    };
    const Gradients fd = finite_difference_grad(t, t.parent_weight, x, 1, loss, 1e-5);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(fd.input[i] - 2.0 * (x[i] - target[i])) < 1e-8);
    }
  }

  SUBCASE("a constant loss has zero gradient everywhere") {
    const tftest::Instance inst = tftest::random_instance(3, 3, 1, rng);
    const LossFn loss = [](std::span<const double>, std::int64_t) { return 0.0; };
    const Gradients fd =
        finite_difference_grad(inst.tree, inst.omega, inst.x, 1, loss, 1e-5);
    for (const double v : fd.input) CHECK(v == 0.0);
    for (const double v : fd.edge_weight) CHECK(v == 0.0);
  }

  SUBCASE("step outside [1e-7, 1e-3] is rejected") {
    const tftest::Instance inst = tftest::random_instance(2, 2, 1, rng);
    const LossFn loss = [](std::span<const double>, std::int64_t) { return 0.0; };
    CHECK_THROWS_AS(
        (void)finite_difference_grad(inst.tree, inst.omega, inst.x, 1, loss, 1e-2), Error);
    CHECK_THROWS_AS(
        (void)finite_difference_grad(inst.tree, inst.omega, inst.x, 1, loss, 1e-8), Error);
  }

  SUBCASE("non-finite loss is a validation error") {
    const tftest::Instance inst = tftest::random_instance(2, 2, 1, rng);
    const LossFn loss = [](std::span<const double>, std::int64_t) {
      return std::numeric_limits<double>::infinity();
    };
    try {
      (void)finite_difference_grad(inst.tree, inst.omega, inst.x, 1, loss, 1e-5);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::validation);
    }
  }
}
