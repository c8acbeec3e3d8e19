#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treefilter/bench.hpp"
#include "treefilter/gradcheck.hpp"
#include "treefilter/image_io.hpp"
#include "treefilter/reference_oracle.hpp"
#include "treefilter/tensor_io.hpp"
#include "treefilter/tree_filter.hpp"

namespace tf = treefilter;

namespace {

// Exit contract: 0 success, 1 usage/parse, 2 validation, 3 tolerance breach.
int exit_code_for(const tf::Error& e) {
  switch (e.kind()) {
    case tf::ErrorKind::usage:
    case tf::ErrorKind::parse:
      return 1;
    case tf::ErrorKind::tolerance:
      return 3;
    default:
      return 2;
  }
}

struct LoadedFeatures {
  tf::FeatureMap features;
  bool from_image = false;
  std::vector<std::uint32_t> tensor_dims; // original shape for tensor inputs
  bool tensor_f64 = true;
};

LoadedFeatures load_features(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) tf::fail(tf::ErrorKind::parse, path + ": cannot open file");
  char head[4] = {};
  probe.read(head, 4);
  probe.close();

  LoadedFeatures loaded;
  if (std::string_view(head, 4) == "LTF1") {
    const tf::Ltf1Tensor tensor = tf::read_ltf1(path);
    if (tensor.dims.size() != 2 && tensor.dims.size() != 3) {
      tf::fail(tf::ErrorKind::validation,
               path + ": filtering expects a rank-2 (H,W) or rank-3 (C,H,W) tensor");
    }
    const bool has_channels = tensor.dims.size() == 3;
    const int c = has_channels ? static_cast<int>(tensor.dims[0]) : 1;
    const int h = static_cast<int>(tensor.dims[has_channels ? 1 : 0]);
    const int w = static_cast<int>(tensor.dims[has_channels ? 2 : 1]);
    loaded.features = tf::FeatureMap(c, h, w);
    loaded.features.data = tensor.as_f64();
    loaded.features.validate();
    loaded.tensor_dims = tensor.dims;
    loaded.tensor_f64 = tensor.is_f64();
    return loaded;
  }
  if (head[0] == 'P' && (head[1] == '5' || head[1] == '6')) {
    loaded.features = tf::image_to_features(tf::read_image(path));
    loaded.from_image = true;
    return loaded;
  }
  tf::fail(tf::ErrorKind::parse,
           path + ": unrecognized format (want LTF1, P5, or P6) at byte 0");
}

void save_like_input(const std::string& path, const tf::FeatureMap& features,
                     const LoadedFeatures& source) {
  if (source.from_image) {
    tf::write_image(path, tf::features_to_image(features));
    return;
  }
  tf::Ltf1Tensor tensor;
  tensor.dims = source.tensor_dims;
  if (source.tensor_f64) {
    tensor.payload = features.data;
  } else {
    tensor.payload = std::vector<float>(features.data.begin(), features.data.end());
  }
  tf::write_ltf1(path, tensor);
}

std::pair<int, int> parse_coordinate_pair(const std::string& text, const char* flag) {
  int a = 0, b = 0;
  char trailing = 0;
  if (std::sscanf(text.c_str(), "%d,%d%c", &a, &b, &trailing) != 2) {
    tf::fail(tf::ErrorKind::usage,
             std::string(flag) + " wants ROW,COL, got '" + text + "'");
  }
  return {a, b};
}

void emit_report(const std::string& json, const std::string& output_path) {
  std::cout << json;
  if (!output_path.empty()) {
    std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
    if (!out) tf::fail(tf::ErrorKind::validation, output_path + ": cannot open for writing");
    out << json;
  }
}

struct FilterArgs {
  std::string input, guidance, embedding, output;
  double scale = 1.0;
  int groups = 1;
  std::uint64_t seed = 0;
  bool residual = false;
};

int run_filter(const FilterArgs& args) {
  const LoadedFeatures input = load_features(args.input);
  const std::string guidance_path = args.guidance.empty() ? args.input : args.guidance;
  const std::string embedding_path =
      args.embedding.empty() ? guidance_path : args.embedding;
  const LoadedFeatures guidance =
      guidance_path == args.input ? input : load_features(guidance_path);
  const LoadedFeatures embedding =
      embedding_path == guidance_path ? guidance : load_features(embedding_path);

  tf::GroupedFilterOptions options;
  options.groups = args.groups;
  options.scale = args.scale;
  options.seed = args.seed;
  options.residual = args.residual;
  const tf::FeatureMap filtered =
      tf::grouped_filter(guidance.features, embedding.features, input.features, options);
  save_like_input(args.output, filtered, input);
  return 0;
}

struct AffinityArgs {
  std::string input, guidance, embedding, output, pos;
  double scale = 1.0;
  std::uint64_t seed = 0;
};

int run_affinity(const AffinityArgs& args) {
  const LoadedFeatures input = load_features(args.input);
  const std::string guidance_path = args.guidance.empty() ? args.input : args.guidance;
  const std::string embedding_path =
      args.embedding.empty() ? guidance_path : args.embedding;
  const LoadedFeatures guidance =
      guidance_path == args.input ? input : load_features(guidance_path);
  const LoadedFeatures embedding =
      embedding_path == guidance_path ? guidance : load_features(embedding_path);

  const auto [row, col] = parse_coordinate_pair(args.pos, "--pos");
  const tf::FeatureMap& base = input.features;
  if (row < 0 || row >= base.height || col < 0 || col >= base.width) {
    tf::fail(tf::ErrorKind::validation,
             "--pos " + args.pos + " outside the " + std::to_string(base.height) + "x" +
                 std::to_string(base.width) + " input");
  }

  tf::PlanarGraph graph = tf::pairwise_dissimilarity(
      guidance.features, tf::build_planar_graph(base.height, base.width), args.scale);
  const std::int64_t n = graph.vertex_count();
  const tf::SpanningTree tree =
      tf::root_tree(tf::boruvka_mst(graph), graph, tf::sample_root(n, args.seed));

  std::vector<double> omega(n, 0.0);
  for (std::int64_t v = 0; v < n; ++v) {
    if (v != tree.root) {
      omega[v] = tf::embedding_distance(embedding.features, v, tree.parent[v], 0,
                                        embedding.features.channels, args.scale);
    }
  }
  const tf::EdgeSimilarity sim = tf::edge_similarity(omega, tree.root);
  const std::vector<double> affinity =
      tf::affinity_map(tree, sim.values, static_cast<std::int64_t>(row) * base.width + col);

  tf::FeatureMap rendered(1, base.height, base.width);
  rendered.data = affinity;
  tf::write_image(args.output, tf::features_to_image(rendered));
  return 0;
}

struct GradcheckArgs {
  std::string grid = "16,16";
  int instances = 20;
  int channels = 3;
  std::uint64_t seed = 0;
  double step = 1e-5;
  bool corrupt_blend = false;
  std::string output;
};

int run_gradcheck_cmd(const GradcheckArgs& args) {
  const auto [rows, cols] = parse_coordinate_pair(args.grid, "--grid");
  tf::GradcheckConfig config;
  config.grid_height = rows;
  config.grid_width = cols;
  config.instances = args.instances;
  config.channels = args.channels;
  config.seed = args.seed;
  config.fd_step = args.step;
  config.corrupt_blend = args.corrupt_blend;

  const tf::GradcheckReport report = tf::run_gradcheck(config);
  emit_report(tf::gradcheck_report_json(report), args.output);
  if (!report.pass) {
    std::cerr << "gradient check exceeded tolerance" << std::endl;
    return 3;
  }
  return 0;
}

struct BenchArgs {
  std::vector<std::int64_t> sizes;
  int reps = 7;
  int channels = 4;
  std::uint64_t seed = 0;
  std::int64_t brute_limit = 4096;
  std::string output;
};

int run_bench_cmd(const BenchArgs& args) {
  if (args.sizes.empty()) {
    tf::fail(tf::ErrorKind::usage, "--sizes needs at least one vertex count");
  }
  tf::BenchConfig config;
  config.sizes = args.sizes;
  config.repetitions = args.reps;
  config.channels = args.channels;
  config.seed = args.seed;
  config.brute_limit = args.brute_limit;
  const tf::BenchReport report = tf::run_scaling_benchmark(config);
  emit_report(tf::bench_report_json(report), args.output);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "treefilter: edge-aware filtering and affinity maps over minimum-spanning-tree "
      "graphs"};
  app.require_subcommand(1);

  FilterArgs filter_args;
  CLI::App* filter = app.add_subcommand("filter", "Filter an image or tensor");
  filter->add_option("--input", filter_args.input, "PPM/PGM image or LTF1 tensor")
      ->required();
  filter->add_option("--guidance", filter_args.guidance,
                     "spanning-tree guidance map (default: the input)");
  filter->add_option("--embedding", filter_args.embedding,
                     "edge-weight embedding (default: the guidance)");
  filter->add_option("--scale", filter_args.scale, "dissimilarity scale")
      ->check(CLI::PositiveNumber);
  filter->add_option("--groups", filter_args.groups, "channel groups")
      ->check(CLI::PositiveNumber);
  filter->add_option("--seed", filter_args.seed, "root sampling seed");
  filter->add_flag("--residual", filter_args.residual, "add the input to the output");
  filter->add_option("--output", filter_args.output, "output path")->required();

  AffinityArgs affinity_args;
  CLI::App* affinity =
      app.add_subcommand("affinity", "Render the affinity map of one pixel");
  affinity->add_option("--input", affinity_args.input, "PPM/PGM image or LTF1 tensor")
      ->required();
  affinity->add_option("--guidance", affinity_args.guidance,
                       "spanning-tree guidance map (default: the input)");
  affinity->add_option("--embedding", affinity_args.embedding,
                       "edge-weight embedding (default: the guidance)");
  affinity->add_option("--pos", affinity_args.pos, "query pixel as ROW,COL")->required();
  affinity->add_option("--scale", affinity_args.scale, "dissimilarity scale")
      ->check(CLI::PositiveNumber);
  affinity->add_option("--seed", affinity_args.seed, "root sampling seed");
  affinity->add_option("--output", affinity_args.output, "output PGM path")->required();

  GradcheckArgs gradcheck_args;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Compare analytic gradients against the dense reference and "
                   "finite differences");
  gradcheck->add_option("--grid", gradcheck_args.grid, "instance grid as ROWS,COLS");
  gradcheck->add_option("--instances", gradcheck_args.instances, "instance count")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--channels", gradcheck_args.channels, "feature channels")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gradcheck_args.seed, "instance seed");
  gradcheck->add_option("--step", gradcheck_args.step, "finite-difference step");
  gradcheck->add_option("--output", gradcheck_args.output, "also write the JSON here");
  gradcheck->add_flag("--corrupt-blend", gradcheck_args.corrupt_blend)->group("");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "Measure forward/backward scaling");
  bench->add_option("--sizes", bench_args.sizes, "vertex counts, comma separated")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->required();
  bench->add_option("--reps", bench_args.reps, "timed repetitions per size")
      ->check(CLI::Range(5, 1 << 20));
  bench->add_option("--channels", bench_args.channels, "feature channels")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_args.seed, "instance seed");
  bench->add_option("--brute-limit", bench_args.brute_limit,
                    "largest size for the quadratic reference");
  bench->add_option("--output", bench_args.output, "also write the JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (filter->parsed()) return run_filter(filter_args);
    if (affinity->parsed()) return run_affinity(affinity_args);
    if (gradcheck->parsed()) return run_gradcheck_cmd(gradcheck_args);
    if (bench->parsed()) return run_bench_cmd(bench_args);
  } catch (const tf::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
