"""Edge-aware filtering and analytic gradients over minimum-spanning-tree graphs."""

from ._treefilter import (
    FilterCache,
    PlanarGraph,
    SpanningTree,
    TreeFilterError,
    affinity_map,
    aggregate,
    backward,
    boruvka_mst,
    brute_backward,
    brute_forward,
    build_planar_graph,
    dense_filter_matrix,
    edge_similarity,
    edge_similarity_from,
    forward,
    grouped_filter,
    kruskal_mst,
    pairwise_dissimilarity,
    propagate,
    root_tree,
    sample_root,
    tree_path_distance,
)

__all__ = [
    "FilterCache",
    "PlanarGraph",
    "SpanningTree",
    "TreeFilterError",
    "affinity_map",
    "aggregate",
    "backward",
    "boruvka_mst",
    "brute_backward",
    "brute_forward",
    "build_planar_graph",
    "dense_filter_matrix",
    "edge_similarity",
    "edge_similarity_from",
    "forward",
    "grouped_filter",
    "kruskal_mst",
    "pairwise_dissimilarity",
    "propagate",
    "root_tree",
    "sample_root",
    "tree_path_distance",
]
