#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "treefilter/reference_oracle.hpp"
#include "treefilter/tree_filter.hpp"

namespace py = pybind11;
namespace tf = treefilter;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

tf::FeatureMap to_feature_map(const DoubleArray& array, const char* what) {
  if (array.ndim() != 3) {
    tf::fail(tf::ErrorKind::dimension, std::string(what) + " wants a (C, H, W) array");
  }
  tf::FeatureMap features(static_cast<int>(array.shape(0)), static_cast<int>(array.shape(1)),
                          static_cast<int>(array.shape(2)));
  std::copy(array.data(), array.data() + array.size(), features.data.begin());
  features.validate();
  return features;
}

// (K, N) planes, or a single (N,) plane.
std::pair<std::vector<double>, std::int64_t> to_planes(const DoubleArray& array,
                                                       std::int64_t n, const char* what) {
  std::int64_t channels = 1;
  if (array.ndim() == 2) {
    channels = array.shape(0);
  } else if (array.ndim() != 1) {
    tf::fail(tf::ErrorKind::dimension, std::string(what) + " wants shape (N,) or (K, N)");
  }
  if (array.shape(array.ndim() - 1) != n) {
    tf::fail(tf::ErrorKind::dimension,
             std::string(what) + " last axis must match the vertex count");
  }
  return {std::vector<double>(array.data(), array.data() + array.size()), channels};
}

std::vector<double> to_vertex_vector(const DoubleArray& array, std::int64_t n,
                                     const char* what) {
  if (array.ndim() != 1 || array.shape(0) != n) {
    tf::fail(tf::ErrorKind::dimension,
             std::string(what) + " wants one value per vertex");
  }
  return {array.data(), array.data() + array.size()};
}

py::array planes_to_numpy(const std::vector<double>& data, std::int64_t channels,
                          std::int64_t n) {
  DoubleArray out({channels, n});
  std::copy(data.begin(), data.end(), out.mutable_data());
  return std::move(out);
}

py::array vector_to_numpy(const std::vector<double>& data) {
  DoubleArray out(static_cast<py::ssize_t>(data.size()));
  std::copy(data.begin(), data.end(), out.mutable_data());
  return std::move(out);
}

py::array vector_to_numpy(const std::vector<std::int64_t>& data) {
  IndexArray out(static_cast<py::ssize_t>(data.size()));
  std::copy(data.begin(), data.end(), out.mutable_data());
  return std::move(out);
}

py::array feature_map_to_numpy(const tf::FeatureMap& features) {
  DoubleArray out({static_cast<py::ssize_t>(features.channels),
                   static_cast<py::ssize_t>(features.height),
                   static_cast<py::ssize_t>(features.width)});
  std::copy(features.data.begin(), features.data.end(), out.mutable_data());
  return std::move(out);
}

} // namespace

PYBIND11_MODULE(_treefilter, m) {
  m.doc() = "Linear-time edge-aware filtering and analytic gradients over "
            "minimum-spanning-tree graphs";

  py::register_exception<tf::Error>(m, "TreeFilterError", PyExc_ValueError);

  py::class_<tf::PlanarGraph>(m, "PlanarGraph")
      .def_readonly("height", &tf::PlanarGraph::height)
      .def_readonly("width", &tf::PlanarGraph::width)
      .def_property_readonly("vertex_count", &tf::PlanarGraph::vertex_count)
      .def_property_readonly("edges",
                             [](const tf::PlanarGraph& g) {
                               IndexArray out({static_cast<py::ssize_t>(g.edges.size()),
                                               py::ssize_t{2}});
                               auto* data = out.mutable_data();
                               for (std::size_t e = 0; e < g.edges.size(); ++e) {
                                 data[2 * e] = g.edges[e].u;
                                 data[2 * e + 1] = g.edges[e].v;
                               }
                               return py::array(std::move(out));
                             })
      .def_property_readonly(
          "weights", [](const tf::PlanarGraph& g) { return vector_to_numpy(g.weights); });

  py::class_<tf::SpanningTree>(m, "SpanningTree")
      .def_readonly("vertex_count", &tf::SpanningTree::vertex_count)
      .def_readonly("root", &tf::SpanningTree::root)
      .def_property_readonly(
          "parent", [](const tf::SpanningTree& t) { return vector_to_numpy(t.parent); })
      .def_property_readonly(
          "parent_edge",
          [](const tf::SpanningTree& t) { return vector_to_numpy(t.parent_edge); })
      .def_property_readonly(
          "parent_weight",
          [](const tf::SpanningTree& t) { return vector_to_numpy(t.parent_weight); })
      .def_property_readonly(
          "bfs_order", [](const tf::SpanningTree& t) { return vector_to_numpy(t.bfs_order); })
      .def_property_readonly(
          "depth", [](const tf::SpanningTree& t) { return vector_to_numpy(t.depth); });

  py::class_<tf::FilterCache>(m, "FilterCache")
      .def_readonly("channels", &tf::FilterCache::channels)
      .def_property_readonly("output",
                             [](const tf::FilterCache& c) {
                               return planes_to_numpy(c.output, c.channels, c.vertex_count);
                             })
      .def_property_readonly("normalization",
                             [](const tf::FilterCache& c) {
                               return vector_to_numpy(c.normalization);
                             })
      .def_property_readonly("vertex_visits", [](const tf::FilterCache& c) {
        return c.counters.vertex_visits;
      });

  m.def("build_planar_graph", &tf::build_planar_graph, py::arg("height"), py::arg("width"));

  m.def(
      "pairwise_dissimilarity",
      [](const DoubleArray& embedding, const tf::PlanarGraph& graph, double scale) {
        return tf::pairwise_dissimilarity(to_feature_map(embedding, "embedding"), graph,
                                          scale);
      },
      py::arg("embedding"), py::arg("graph"), py::arg("scale") = 1.0);

  m.def("boruvka_mst",
        [](const tf::PlanarGraph& graph) { return vector_to_numpy(tf::boruvka_mst(graph)); });
  m.def("kruskal_mst",
        [](const tf::PlanarGraph& graph) { return vector_to_numpy(tf::kruskal_mst(graph)); });

  m.def(
      "root_tree",
      [](const IndexArray& edges, const tf::PlanarGraph& graph, std::int64_t root) {
        return tf::root_tree(
            std::span<const std::int64_t>(edges.data(), static_cast<std::size_t>(edges.size())),
            graph, root);
      },
      py::arg("tree_edges"), py::arg("graph"), py::arg("root"));

  m.def("sample_root", &tf::sample_root, py::arg("vertex_count"), py::arg("seed"));

  m.def(
      "edge_similarity",
      [](const tf::SpanningTree& tree) { return vector_to_numpy(tf::edge_similarity(tree).values); },
      py::arg("tree"));
  m.def(
      "edge_similarity_from",
      [](const DoubleArray& omega, std::int64_t root) {
        return vector_to_numpy(
            tf::edge_similarity(std::span<const double>(omega.data(), omega.size()), root)
                .values);
      },
      py::arg("parent_omega"), py::arg("root"));

  m.def(
      "aggregate",
      [](const tf::SpanningTree& tree, const DoubleArray& similarity,
         const DoubleArray& values) {
        const auto sim = to_vertex_vector(similarity, tree.vertex_count, "similarity");
        const auto [planes, channels] = to_planes(values, tree.vertex_count, "values");
        return planes_to_numpy(tf::aggregate<double>(tree, sim, planes, channels), channels,
                               tree.vertex_count);
      },
      py::arg("tree"), py::arg("similarity"), py::arg("values"));

  m.def(
      "propagate",
      [](const tf::SpanningTree& tree, const DoubleArray& similarity,
         const DoubleArray& aggregated) {
        const auto sim = to_vertex_vector(similarity, tree.vertex_count, "similarity");
        const auto [planes, channels] = to_planes(aggregated, tree.vertex_count, "aggregated");
        return planes_to_numpy(tf::propagate<double>(tree, sim, planes, channels), channels,
                               tree.vertex_count);
      },
      py::arg("tree"), py::arg("similarity"), py::arg("aggregated"));

  m.def(
      "forward",
      [](const tf::SpanningTree& tree, const DoubleArray& similarity, const DoubleArray& x) {
        const auto sim = to_vertex_vector(similarity, tree.vertex_count, "similarity");
        const auto [planes, channels] = to_planes(x, tree.vertex_count, "input");
        return tf::forward<double>(tree, sim, planes, channels);
      },
      py::arg("tree"), py::arg("similarity"), py::arg("input"));

  m.def(
      "backward",
      [](const tf::SpanningTree& tree, const DoubleArray& similarity,
         const tf::FilterCache& cache, const DoubleArray& output_grad) {
        const auto sim = to_vertex_vector(similarity, tree.vertex_count, "similarity");
        const auto [planes, channels] = to_planes(output_grad, tree.vertex_count, "output_grad");
        const tf::Gradients grads = tf::backward(tree, sim, cache, planes, channels);
        return py::make_tuple(planes_to_numpy(grads.input, channels, tree.vertex_count),
                              vector_to_numpy(grads.edge_weight));
      },
      py::arg("tree"), py::arg("similarity"), py::arg("cache"), py::arg("output_grad"));

  m.def(
      "affinity_map",
      [](const tf::SpanningTree& tree, const DoubleArray& similarity, std::int64_t query) {
        const auto sim = to_vertex_vector(similarity, tree.vertex_count, "similarity");
        return vector_to_numpy(tf::affinity_map(tree, sim, query));
      },
      py::arg("tree"), py::arg("similarity"), py::arg("query"));

  m.def(
      "grouped_filter",
      [](const DoubleArray& guidance, const DoubleArray& embedding, const DoubleArray& input,
         int groups, double scale, std::uint64_t seed, bool residual) {
        tf::GroupedFilterOptions options;
        options.groups = groups;
        options.scale = scale;
        options.seed = seed;
        options.residual = residual;
        return feature_map_to_numpy(
            tf::grouped_filter(to_feature_map(guidance, "guidance"),
                               to_feature_map(embedding, "embedding"),
                               to_feature_map(input, "input"), options));
      },
      py::arg("guidance"), py::arg("embedding"), py::arg("input"), py::arg("groups") = 1,
      py::arg("scale") = 1.0, py::arg("seed") = 0, py::arg("residual") = false);

  m.def(
      "brute_forward",
      [](const tf::SpanningTree& tree, const DoubleArray& omega, const DoubleArray& x) {
        const auto om = to_vertex_vector(omega, tree.vertex_count, "parent_omega");
        const auto [planes, channels] = to_planes(x, tree.vertex_count, "input");
        return planes_to_numpy(tf::brute_forward(tree, om, planes, channels), channels,
                               tree.vertex_count);
      },
      py::arg("tree"), py::arg("parent_omega"), py::arg("input"));

  m.def(
      "brute_backward",
      [](const tf::SpanningTree& tree, const DoubleArray& omega, const DoubleArray& x,
         const DoubleArray& output_grad) {
        const auto om = to_vertex_vector(omega, tree.vertex_count, "parent_omega");
        const auto [planes, channels] = to_planes(x, tree.vertex_count, "input");
        const auto [grad, grad_channels] =
            to_planes(output_grad, tree.vertex_count, "output_grad");
        if (grad_channels != channels) {
          tf::fail(tf::ErrorKind::dimension, "input and output_grad disagree on channels");
        }
        const tf::Gradients grads = tf::brute_backward(tree, om, planes, grad, channels);
        return py::make_tuple(planes_to_numpy(grads.input, channels, tree.vertex_count),
                              vector_to_numpy(grads.edge_weight));
      },
      py::arg("tree"), py::arg("parent_omega"), py::arg("input"), py::arg("output_grad"));

  m.def(
      "tree_path_distance",
      [](const tf::SpanningTree& tree, const DoubleArray& omega, std::int64_t i,
         std::int64_t j) {
        const auto om = to_vertex_vector(omega, tree.vertex_count, "parent_omega");
        return tf::tree_path_distance(tree, om, i, j);
      },
      py::arg("tree"), py::arg("parent_omega"), py::arg("i"), py::arg("j"));

  m.def(
      "dense_filter_matrix",
      [](const tf::SpanningTree& tree, const DoubleArray& omega) {
        const auto om = to_vertex_vector(omega, tree.vertex_count, "parent_omega");
        const tf::DenseFilterMatrix dense = tf::dense_filter_matrix(tree, om);
        return py::make_tuple(planes_to_numpy(dense.similarity, dense.n, dense.n),
                              vector_to_numpy(dense.normalization));
      },
      py::arg("tree"), py::arg("parent_omega"));
}
