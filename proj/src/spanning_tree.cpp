#include "treefilter/spanning_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace treefilter {

namespace {

void check_weighted(const PlanarGraph& graph) {
  if (graph.vertex_count() < 1) {
    fail(ErrorKind::size, "graph has no vertices");
  }
  if (graph.weights.size() != graph.edges.size()) {
    fail(ErrorKind::dimension, "graph carries " + std::to_string(graph.weights.size()) +
                                   " weights for " + std::to_string(graph.edges.size()) +
                                   " edges");
  }
  for (std::size_t e = 0; e < graph.weights.size(); ++e) {
    if (!std::isfinite(graph.weights[e])) {
      fail(ErrorKind::validation, "edge weight " + std::to_string(e) + " is not finite");
    }
  }
}

struct DisjointSet {
  std::vector<std::int64_t> parent;
  std::vector<std::int64_t> size;

  explicit DisjointSet(std::int64_t n) : parent(n), size(n, 1) {
    std::iota(parent.begin(), parent.end(), std::int64_t{0});
  }

  std::int64_t find(std::int64_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]]; // path halving
      v = parent[v];
    }
    return v;
  }

  bool merge(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
    return true;
  }
};

// Lower (weight, original index) wins everywhere, which makes the MST unique
// and Boruvka/Kruskal agree edge-for-edge.
inline bool edge_less(double wa, std::int64_t ia, double wb, std::int64_t ib) {
  if (wa != wb) return wa < wb;
  return ia < ib;
}

} // namespace

std::vector<std::int64_t> boruvka_mst(const PlanarGraph& graph) {
  check_weighted(graph);
  const std::int64_t n = graph.vertex_count();

  struct CEdge {
    std::int64_t u, v;
    double w;
    std::int64_t index; // into graph.edges
  };
  std::vector<CEdge> live;
  live.reserve(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    live.push_back({graph.edges[e].u, graph.edges[e].v, graph.weights[e],
                    static_cast<std::int64_t>(e)});
  }

  DisjointSet components(n);
  std::int64_t component_count = n;
  std::vector<std::int64_t> selected;
  selected.reserve(static_cast<std::size_t>(n - 1));

  while (component_count > 1) {
    if (live.empty()) {
      fail(ErrorKind::connectivity, "graph is disconnected: " +
                                        std::to_string(component_count) +
                                        " components remain with no edges left");
    }

    const std::int64_t k = static_cast<std::int64_t>(live.size());
    // Endpoints are vertex ids in the first round and compact component ids
    // afterwards; either way they index the per-component minimum table.
    std::int64_t id_space = 0;
    for (const CEdge& e : live) id_space = std::max({id_space, e.u + 1, e.v + 1});
    std::vector<std::int64_t> best(id_space, -1); // component id -> index into live

    for (std::int64_t i = 0; i < k; ++i) {
      const CEdge& e = live[i];
      for (const std::int64_t side : {e.u, e.v}) {
        if (best[side] == -1 ||
            edge_less(e.w, e.index, live[best[side]].w, live[best[side]].index)) {
          best[side] = i;
        }
      }
    }

    // Merge along each component's minimum edge. Two components may pick the
    // same edge; the second merge attempt is a no-op.
    for (std::int64_t id = 0; id < id_space; ++id) {
      if (best[id] == -1) continue;
      const CEdge& e = live[best[id]];
      const auto& original = graph.edges[e.index];
      if (components.merge(original.u, original.v)) {
        selected.push_back(e.index);
        --component_count;
      }
    }

    if (component_count == 1) break;

    // Contract: relabel endpoints to compact component ids, drop self loops,
    // and keep only the minimum parallel edge between each id pair.
    std::vector<std::int64_t> compact(n, -1);
    std::int64_t next_id = 0;
    auto compact_id = [&](std::int64_t vertex) {
      const std::int64_t root_vertex = components.find(vertex);
      if (compact[root_vertex] == -1) compact[root_vertex] = next_id++;
      return compact[root_vertex];
    };

    std::unordered_map<std::uint64_t, CEdge> contracted;
    contracted.reserve(live.size());
    for (const CEdge& e : live) {
      const auto& original = graph.edges[e.index];
      std::int64_t cu = compact_id(original.u);
      std::int64_t cv = compact_id(original.v);
      if (cu == cv) continue;
      if (cu > cv) std::swap(cu, cv);
      const std::uint64_t key =
          (static_cast<std::uint64_t>(cu) << 32) | static_cast<std::uint64_t>(cv);
      auto it = contracted.find(key);
      if (it == contracted.end()) {
        contracted.emplace(key, CEdge{cu, cv, e.w, e.index});
      } else if (edge_less(e.w, e.index, it->second.w, it->second.index)) {
        it->second = CEdge{cu, cv, e.w, e.index};
      }
    }

    live.clear();
    live.reserve(contracted.size());
    for (auto& [key, e] : contracted) {
      (void)key;
      live.push_back(e);
    }
    // Scan order must not depend on hash iteration order.
    std::sort(live.begin(), live.end(),
              [](const CEdge& a, const CEdge& b) { return a.index < b.index; });
  }

  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<std::int64_t> kruskal_mst(const PlanarGraph& graph) {
  check_weighted(graph);
  const std::int64_t n = graph.vertex_count();

  std::vector<std::int64_t> order(graph.edges.size());
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return edge_less(graph.weights[a], a, graph.weights[b], b);
  });

  DisjointSet components(n);
  std::vector<std::int64_t> selected;
  selected.reserve(static_cast<std::size_t>(n - 1));
  for (const std::int64_t e : order) {
    if (components.merge(graph.edges[e].u, graph.edges[e].v)) {
      selected.push_back(e);
      if (static_cast<std::int64_t>(selected.size()) == n - 1) break;
    }
  }
  if (static_cast<std::int64_t>(selected.size()) != n - 1) {
    fail(ErrorKind::connectivity, "graph is disconnected: spanning tree needs " +
                                      std::to_string(n - 1) + " edges, found " +
                                      std::to_string(selected.size()));
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

SpanningTree root_tree(std::span<const std::int64_t> tree_edges, const PlanarGraph& graph,
                       std::int64_t root) {
  check_weighted(graph);
  const std::int64_t n = graph.vertex_count();
  if (root < 0 || root >= n) {
    fail(ErrorKind::validation, "root " + std::to_string(root) + " outside [0, " +
                                    std::to_string(n) + ")");
  }
  if (static_cast<std::int64_t>(tree_edges.size()) != n - 1) {
    fail(ErrorKind::structure, "spanning tree over " + std::to_string(n) +
                                   " vertices needs " + std::to_string(n - 1) +
                                   " edges, got " + std::to_string(tree_edges.size()));
  }

  // Sorted neighbor lists so BFS visits children in ascending vertex index.
  std::vector<std::int64_t> degree(n, 0);
  for (const std::int64_t e : tree_edges) {
    if (e < 0 || e >= graph.edge_count()) {
      fail(ErrorKind::structure, "edge index " + std::to_string(e) + " outside the graph");
    }
    ++degree[graph.edges[e].u];
    ++degree[graph.edges[e].v];
  }
  std::vector<std::int64_t> offsets(n + 1, 0);
  for (std::int64_t v = 0; v < n; ++v) offsets[v + 1] = offsets[v] + degree[v];
  std::vector<std::int64_t> neighbor(offsets[n]);
  std::vector<std::int64_t> via_edge(offsets[n]);
  {
    std::vector<std::int64_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const std::int64_t e : tree_edges) {
      const auto [u, v] = graph.edges[e];
      neighbor[cursor[u]] = v;
      via_edge[cursor[u]++] = e;
      neighbor[cursor[v]] = u;
      via_edge[cursor[v]++] = e;
    }
    for (std::int64_t v = 0; v < n; ++v) {
      // Insertion was in edge order; sort each bucket by neighbor id.
      std::vector<std::pair<std::int64_t, std::int64_t>> bucket;
      bucket.reserve(degree[v]);
      for (std::int64_t i = offsets[v]; i < offsets[v + 1]; ++i) {
        bucket.emplace_back(neighbor[i], via_edge[i]);
      }
      std::sort(bucket.begin(), bucket.end());
      for (std::int64_t i = offsets[v]; i < offsets[v + 1]; ++i) {
        neighbor[i] = bucket[i - offsets[v]].first;
        via_edge[i] = bucket[i - offsets[v]].second;
      }
    }
  }

  SpanningTree tree;
  tree.vertex_count = n;
  tree.root = root;
  tree.parent.assign(n, -1);
  tree.parent_edge.assign(n, -1);
  tree.parent_weight.assign(n, 0.0);
  tree.depth.assign(n, -1);
  tree.bfs_order.reserve(n);

  tree.depth[root] = 0;
  tree.bfs_order.push_back(root);
  for (std::size_t head = 0; head < tree.bfs_order.size(); ++head) {
    const std::int64_t v = tree.bfs_order[head];
    for (std::int64_t i = offsets[v]; i < offsets[v + 1]; ++i) {
      const std::int64_t w = neighbor[i];
      if (tree.depth[w] != -1) continue;
      tree.depth[w] = tree.depth[v] + 1;
      tree.parent[w] = v;
      tree.parent_edge[w] = via_edge[i];
      tree.parent_weight[w] = graph.weights[via_edge[i]];
      tree.bfs_order.push_back(w);
    }
  }
  if (static_cast<std::int64_t>(tree.bfs_order.size()) != n) {
    fail(ErrorKind::structure, "edge set does not span the graph: reached " +
                                   std::to_string(tree.bfs_order.size()) + " of " +
                                   std::to_string(n) + " vertices");
  }

  // Children CSR; filling in ascending vertex order keeps each list sorted.
  tree.child_offsets.assign(n + 1, 0);
  for (std::int64_t v = 0; v < n; ++v) {
    if (v != root) ++tree.child_offsets[tree.parent[v] + 1];
  }
  for (std::int64_t v = 0; v < n; ++v) tree.child_offsets[v + 1] += tree.child_offsets[v];
  tree.child_list.assign(n - 1, 0);
  {
    std::vector<std::int64_t> cursor(tree.child_offsets.begin(), tree.child_offsets.end() - 1);
    for (std::int64_t v = 0; v < n; ++v) {
      if (v != root) tree.child_list[cursor[tree.parent[v]]++] = v;
    }
  }

  // Depth buckets are contiguous slices of the BFS order.
  const std::int64_t max_depth = tree.depth[tree.bfs_order.back()];
  tree.depth_offsets.assign(max_depth + 2, 0);
  for (std::int64_t v = 0; v < n; ++v) ++tree.depth_offsets[tree.depth[v] + 1];
  for (std::int64_t d = 0; d <= max_depth; ++d) {
    tree.depth_offsets[d + 1] += tree.depth_offsets[d];
  }
  return tree;
}

std::int64_t sample_root(std::int64_t vertex_count, std::uint64_t seed) {
  if (vertex_count < 1) {
    fail(ErrorKind::size, "vertex count must be positive");
  }
  // splitmix64 finalizer; deterministic across platforms.
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  x ^= x >> 31;
  return static_cast<std::int64_t>(
      (static_cast<unsigned __int128>(x) * static_cast<std::uint64_t>(vertex_count)) >> 64);
}

void SpanningTree::validate(const PlanarGraph& source) const {
  const std::int64_t n = vertex_count;
  if (n != source.vertex_count()) {
    fail(ErrorKind::dimension, "tree and source graph disagree on vertex count");
  }
  if (root < 0 || root >= n || parent[root] != -1 || depth[root] != 0) {
    fail(ErrorKind::structure, "root bookkeeping is inconsistent");
  }
  if (static_cast<std::int64_t>(bfs_order.size()) != n || bfs_order[0] != root) {
    fail(ErrorKind::structure, "bfs order must list every vertex, root first");
  }
  std::vector<std::int64_t> position(n, -1);
  for (std::int64_t i = 0; i < n; ++i) position[bfs_order[i]] = i;
  for (std::int64_t v = 0; v < n; ++v) {
    if (position[v] == -1) fail(ErrorKind::structure, "bfs order is not a permutation");
    if (v == root) continue;
    const std::int64_t p = parent[v];
    if (p < 0 || p >= n) fail(ErrorKind::structure, "missing parent");
    if (position[p] >= position[v]) {
      fail(ErrorKind::structure, "parent must appear before child in bfs order");
    }
    if (depth[v] != depth[p] + 1) fail(ErrorKind::structure, "depth mismatch");
    const std::int64_t e = parent_edge[v];
    if (e < 0 || e >= source.edge_count()) fail(ErrorKind::structure, "bad parent edge");
    const auto edge = source.edges[e];
    const bool matches = (edge.u == v && edge.v == p) || (edge.u == p && edge.v == v);
    if (!matches || parent_weight[v] != source.weights[e]) {
      fail(ErrorKind::structure, "parent edge does not match the source graph");
    }
  }
}

} // namespace treefilter
