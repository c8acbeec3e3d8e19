#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treefilter/grid_graph.hpp"

namespace treefilter {

// Rooted spanning tree over N vertices plus the traversal structures the
// filter passes need: breadth-first order (root first, parents before
// children) and contiguous depth buckets inside that order.
struct SpanningTree {
  std::int64_t vertex_count = 0;
  std::int64_t root = 0;
  std::vector<std::int64_t> parent;        // -1 at root
  std::vector<std::int64_t> parent_edge;   // source graph edge index, -1 at root
  std::vector<double> parent_weight;       // omega of (v, parent[v]), 0 at root
  std::vector<std::int64_t> bfs_order;
  std::vector<std::int64_t> depth;         // depth[root] == 0
  std::vector<std::int64_t> child_offsets; // CSR adjacency, children ascending
  std::vector<std::int64_t> child_list;
  std::vector<std::int64_t> depth_offsets; // bfs_order slice per depth level

  std::int64_t depth_levels() const {
    return static_cast<std::int64_t>(depth_offsets.size()) - 1;
  }
  std::span<const std::int64_t> level(std::int64_t d) const {
    return {bfs_order.data() + depth_offsets[d],
            static_cast<std::size_t>(depth_offsets[d + 1] - depth_offsets[d])};
  }
  std::span<const std::int64_t> children(std::int64_t v) const {
    return {child_list.data() + child_offsets[v],
            static_cast<std::size_t>(child_offsets[v + 1] - child_offsets[v])};
  }

  // Checks every structural invariant against the source graph.
  void validate(const PlanarGraph& source) const;
};

// Minimum spanning tree via contractive Boruvka: each round every component
// picks its minimum incident edge, ties broken toward the lower edge index,
// and the survivor graph is contracted (self loops dropped, parallel edges
// deduplicated). Returns the selected edge indices in ascending order.
std::vector<std::int64_t> boruvka_mst(const PlanarGraph& graph);

// Independent Kruskal implementation with the same (weight, index) ordering.
// Used as the correctness oracle for boruvka_mst.
std::vector<std::int64_t> kruskal_mst(const PlanarGraph& graph);

// Roots the given spanning edge set and derives parents, depths, BFS order
// (children visited in ascending vertex index), and depth buckets.
SpanningTree root_tree(std::span<const std::int64_t> tree_edges,
                       const PlanarGraph& graph, std::int64_t root);

// Seed-deterministic uniform draw from [0, vertex_count).
std::int64_t sample_root(std::int64_t vertex_count, std::uint64_t seed);

} // namespace treefilter
