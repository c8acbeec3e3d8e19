#include <doctest.h>

#include <set>

#include "test_util.hpp"
#include "treefilter/spanning_tree.hpp"

using namespace treefilter;
using tftest::total_weight;

TEST_CASE("path graphs are their own MST") {
  const PlanarGraph g = tftest::path_graph({3.0, 1.0});
  const auto edges = boruvka_mst(g);
  CHECK(edges == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("2x2 grid drops the heaviest cycle edge") {
  PlanarGraph g = build_planar_graph(2, 2);
  g.weights = {5.0, 1.0, 2.0, 3.0}; // edges (0,1),(2,3),(0,2),(1,3)
  const auto edges = boruvka_mst(g);
  CHECK(edges == std::vector<std::int64_t>{1, 2, 3});
  CHECK(total_weight(g, edges) == 6.0);
  CHECK(kruskal_mst(g) == edges);
}

TEST_CASE("equal weights tie-break to the unique low-index MST") {
  PlanarGraph g = build_planar_graph(3, 3);
  g.weights.assign(g.edges.size(), 1.5);
  const auto b = boruvka_mst(g);
  const auto k = kruskal_mst(g);
  CHECK(b == k);
  CHECK(b.size() == 8);
  CHECK(total_weight(g, b) == 8 * 1.5);
}

TEST_CASE("kruskal picks the single edge of a 1x2 grid") {
  PlanarGraph g = build_planar_graph(1, 2);
  g.weights = {0.7};
  CHECK(kruskal_mst(g) == std::vector<std::int64_t>{0});
  CHECK(boruvka_mst(g) == std::vector<std::int64_t>{0});
}

TEST_CASE("boruvka agrees with the kruskal oracle on random grids") {
  SplitMix64 rng(11);
  for (int round = 0; round < 60; ++round) {
    const int h = 1 + static_cast<int>(rng.below(12));
    const int w = h == 1 ? 2 + static_cast<int>(rng.below(11))
                         : 1 + static_cast<int>(rng.below(12));
    const PlanarGraph g = tftest::random_weighted_grid(h, w, rng);
    const auto b = boruvka_mst(g);
    const auto k = kruskal_mst(g);
    // continuous weights are distinct with probability 1 -> unique MST
    CHECK(b == k);
    CHECK(total_weight(g, b) == total_weight(g, k));
    CHECK(static_cast<std::int64_t>(b.size()) == g.vertex_count() - 1);
  }
}

TEST_CASE("heavy ties still produce the unique index-broken MST") {
  SplitMix64 rng(19);
  for (int round = 0; round < 40; ++round) {
    const int h = 2 + static_cast<int>(rng.below(10));
    const int w = 2 + static_cast<int>(rng.below(10));
    PlanarGraph g = build_planar_graph(h, w);
    g.weights.resize(g.edges.size());
    // three distinct levels -> most components tie on their minimum
    for (double& weight : g.weights) weight = 0.5 * (1 + rng.below(3));
    const auto b = boruvka_mst(g);
    const auto k = kruskal_mst(g);
    CHECK(b == k);
    CHECK(total_weight(g, b) == total_weight(g, k));
  }
}

TEST_CASE("disconnected inputs raise a connectivity error") {
  PlanarGraph g;
  g.height = 1;
  g.width = 2;
  g.weights = {};
  try {
    boruvka_mst(g);
    FAIL("expected a connectivity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::connectivity);
  }
  CHECK_THROWS_AS(kruskal_mst(g), Error);
}

TEST_CASE("root_tree orients a path correctly") {
  const PlanarGraph g = tftest::path_graph({0.5, 0.25});

  SUBCASE("rooted at the middle") {
    const SpanningTree t = root_tree(std::vector<std::int64_t>{0, 1}, g, 1);
    CHECK(t.parent[0] == 1);
    CHECK(t.parent[2] == 1);
    CHECK(t.parent[1] == -1);
    CHECK(t.depth == std::vector<std::int64_t>{1, 0, 1});
    CHECK(t.parent_weight[0] == 0.5);
    CHECK(t.parent_weight[2] == 0.25);
    t.validate(g);
  }

  SUBCASE("rooted at an end") {
    const SpanningTree t = root_tree(std::vector<std::int64_t>{0, 1}, g, 0);
    CHECK(t.bfs_order == std::vector<std::int64_t>{0, 1, 2});
    CHECK(t.depth == std::vector<std::int64_t>{0, 1, 2});
    t.validate(g);
  }
}

TEST_CASE("root_tree on a star rooted at a leaf") {
  // hand-built star: center 4, leaves 0..3
  PlanarGraph g;
  g.height = 1;
  g.width = 5;
  g.edges = {{0, 4}, {1, 4}, {2, 4}, {3, 4}};
  g.weights = {1.0, 1.0, 1.0, 1.0};
  const SpanningTree t = root_tree(std::vector<std::int64_t>{0, 1, 2, 3}, g, 0);
  CHECK(t.depth[0] == 0);
  CHECK(t.depth[4] == 1);
  CHECK(t.depth[1] == 2);
  CHECK(t.depth[2] == 2);
  CHECK(t.depth[3] == 2);
  CHECK(t.children(4).size() == 3);
}

TEST_CASE("root_tree rejects malformed edge sets") {
  const PlanarGraph g = tftest::path_graph({1.0, 1.0});

  SUBCASE("wrong edge count") {
    try {
      root_tree(std::vector<std::int64_t>{0}, g, 0);
      FAIL("expected a structure error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::structure);
    }
  }

  SUBCASE("duplicate edge leaves the grid unspanned") {
    try {
      root_tree(std::vector<std::int64_t>{0, 0}, g, 0);
      FAIL("expected a structure error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::structure);
    }
  }

  SUBCASE("root out of range") {
    CHECK_THROWS_AS(root_tree(std::vector<std::int64_t>{0, 1}, g, 3), Error);
  }
}

TEST_CASE("bfs order puts parents first and buckets depths contiguously") {
  SplitMix64 rng(23);
  const PlanarGraph g = tftest::random_weighted_grid(9, 11, rng);
  const auto mst = boruvka_mst(g);
  const SpanningTree t = root_tree(mst, g, 37);
  t.validate(g);

  // parent walk terminates at the root within N-1 steps
  for (std::int64_t v = 0; v < t.vertex_count; ++v) {
    std::int64_t cur = v;
    std::int64_t steps = 0;
    while (cur != t.root) {
      cur = t.parent[cur];
      ++steps;
      REQUIRE(steps < t.vertex_count);
    }
    CHECK(steps == t.depth[v]);
  }

  for (std::int64_t d = 0; d < t.depth_levels(); ++d) {
    for (const std::int64_t v : t.level(d)) CHECK(t.depth[v] == d);
  }
}

TEST_CASE("re-rooting changes orientation but never the edge set") {
  SplitMix64 rng(29);
  const PlanarGraph g = tftest::random_weighted_grid(6, 7, rng);
  const auto mst = boruvka_mst(g);

  const SpanningTree a = root_tree(mst, g, 0);
  const SpanningTree b = root_tree(mst, g, 41);
  std::multiset<std::int64_t> ea(a.parent_edge.begin(), a.parent_edge.end());
  std::multiset<std::int64_t> eb(b.parent_edge.begin(), b.parent_edge.end());
  CHECK(ea == eb); // both contain the same N-1 edges plus one -1 sentinel
  CHECK(a.depth != b.depth);
}

TEST_CASE("sample_root is deterministic and covers the range") {
  CHECK(sample_root(1, 0) == 0);
  CHECK(sample_root(1, 12345) == 0);
  CHECK(sample_root(100, 42) == sample_root(100, 42));

  SUBCASE("empirically uniform over many seeds") {
    constexpr std::int64_t n = 100;
    constexpr std::int64_t draws = 100000;
    std::vector<std::int64_t> counts(n, 0);
    for (std::int64_t seed = 0; seed < draws; ++seed) {
      const std::int64_t r = sample_root(n, static_cast<std::uint64_t>(seed));
      REQUIRE(r >= 0);
      REQUIRE(r < n);
      ++counts[r];
    }
    const double expected = static_cast<double>(draws) / n;
    const double sigma = std::sqrt(expected * (1.0 - 1.0 / n));
    double chi2 = 0.0;
    for (const std::int64_t c : counts) {
      CHECK(std::abs(c - expected) <= 3.0 * sigma);
      chi2 += (c - expected) * (c - expected) / expected;
    }
    // 99 degrees of freedom: generous two-sided band
    CHECK(chi2 > 55.0);
    CHECK(chi2 < 155.0);
  }
}
