#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "treefilter/image_io.hpp"
#include "treefilter/tensor_io.hpp"
#include "treefilter/tree_filter.hpp"

using namespace treefilter;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TREEFILTER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string name) : path(std::move(name)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

Image make_noisy_two_region(int height, int width, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image image;
  image.height = height;
  image.width = width;
  image.channels = 3;
  image.pixels.resize(static_cast<std::size_t>(height) * width * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int base = x < width / 2 ? 64 : 192;
      for (int c = 0; c < 3; ++c) {
        const int noisy = base + static_cast<int>(rng.below(41)) - 20;
        image.pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(noisy, 0, 255));
      }
    }
  }
  return image;
}

} // namespace

TEST_CASE("cli filter on images") {
  TempFile input("cli_in.ppm");
  TempFile output("cli_out.ppm");

  SUBCASE("a constant image is a fixpoint") {
    Image image;
    image.height = 6;
    image.width = 8;
    image.channels = 3;
    image.pixels.assign(6 * 8 * 3, 137);
    write_image(input.path, image);
    REQUIRE(run_cli("filter --input " + input.path + " --output " + output.path) == 0);
    CHECK(slurp(output.path) == slurp(input.path));
  }

  SUBCASE("grayscale input comes back grayscale") {
    TempFile gray_in("cli_gray.pgm");
    TempFile gray_out("cli_gray_out.pgm");
    Image image;
    image.height = 7;
    image.width = 9;
    image.channels = 1;
    image.pixels.resize(63);
    SplitMix64 rng(29);
    for (auto& p : image.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    write_image(gray_in.path, image);
    REQUIRE(run_cli("filter --input " + gray_in.path + " --scale 2 --output " +
                    gray_out.path) == 0);
    const Image filtered = read_image(gray_out.path);
    CHECK(filtered.channels == 1);
    CHECK(filtered.width == 9);
    CHECK(filtered.height == 7);
  }

  SUBCASE("a constant embedding averages the whole image") {
    const Image image = make_noisy_two_region(8, 10, 3);
    write_image(input.path, image);
    TempFile flat("cli_flat.ppm");
    Image constant = image;
    std::fill(constant.pixels.begin(), constant.pixels.end(),
              static_cast<std::uint8_t>(9));
    write_image(flat.path, constant);

    REQUIRE(run_cli("filter --input " + input.path + " --embedding " + flat.path +
                    " --guidance " + flat.path + " --output " + output.path) == 0);
    const Image filtered = read_image(output.path);
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0;
      for (std::size_t v = 0; v < image.pixels.size() / 3; ++v) {
        mean += image.pixels[v * 3 + c];
      }
      mean /= static_cast<double>(image.pixels.size() / 3);
      for (std::size_t v = 0; v < filtered.pixels.size() / 3; ++v) {
        CHECK(std::abs(filtered.pixels[v * 3 + c] - mean) <= 1.0);
      }
    }
  }

  SUBCASE("smoothing a noisy step edge keeps the step") {
    const int h = 16, w = 32;
    const Image image = make_noisy_two_region(h, w, 5);
    write_image(input.path, image);
    REQUIRE(run_cli("filter --input " + input.path + " --scale 8 --output " + output.path) ==
            0);
    const Image filtered = read_image(output.path);

    const auto stats = [&](const Image& img, int x0, int x1) {
      double mean = 0.0, var = 0.0;
      int count = 0;
      for (int y = 0; y < h; ++y) {
        for (int x = x0; x < x1; ++x) {
          mean += img.pixels[(static_cast<std::size_t>(y) * w + x) * 3];
          ++count;
        }
      }
      mean /= count;
      for (int y = 0; y < h; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double d = img.pixels[(static_cast<std::size_t>(y) * w + x) * 3] - mean;
          var += d * d;
        }
      }
      return std::pair{mean, var / count};
    };

    const auto [mean_l_before, var_l_before] = stats(image, 0, w / 2);
    const auto [mean_r_before, var_r_before] = stats(image, w / 2, w);
    const auto [mean_l_after, var_l_after] = stats(filtered, 0, w / 2);
    const auto [mean_r_after, var_r_after] = stats(filtered, w / 2, w);

    CHECK(var_l_after < var_l_before);
    CHECK(var_r_after < var_r_before);
    const double gap_before = mean_r_before - mean_l_before;
    const double gap_after = mean_r_after - mean_l_after;
    CHECK(std::abs(gap_after - gap_before) / gap_before < 0.05);
  }
}

TEST_CASE("cli filter on tensors keeps the source dtype") {
  TempFile input("cli_in.ltf");
  TempFile output("cli_out.ltf");

  SplitMix64 rng(7);
  Ltf1Tensor tensor;
  tensor.dims = {2, 5, 6};
  std::vector<float> values(60);
  for (float& v : values) v = static_cast<float>(rng.uniform(0.0, 1.0));
  tensor.payload = values;
  write_ltf1(input.path, tensor);

  REQUIRE(run_cli("filter --input " + input.path + " --groups 2 --scale 2 --output " +
                  output.path) == 0);
  const Ltf1Tensor out = read_ltf1(output.path);
  CHECK(out.dims == tensor.dims);
  CHECK_FALSE(out.is_f64());

  SUBCASE("rank-2 tensors filter as a single plane") {
    Ltf1Tensor plane;
    plane.dims = {4, 9};
    std::vector<double> plane_values(36);
    SplitMix64 plane_rng(23);
    for (double& v : plane_values) v = plane_rng.uniform(0.0, 1.0);
    plane.payload = plane_values;
    write_ltf1(input.path, plane);
    REQUIRE(run_cli("filter --input " + input.path + " --scale 2 --output " + output.path) ==
            0);
    const Ltf1Tensor back = read_ltf1(output.path);
    CHECK(back.dims == plane.dims);
    CHECK(back.is_f64());
  }

  // matches the in-process pipeline on the widened values
  FeatureMap features(2, 5, 6);
  features.data = tensor.as_f64();
  GroupedFilterOptions options;
  options.groups = 2;
  options.scale = 2.0;
  const FeatureMap expected = grouped_filter(features, features, features, options);
  const auto& got = std::get<std::vector<float>>(out.payload);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] == static_cast<float>(expected.data[i]));
  }
}

TEST_CASE("cli affinity renders the query pixel at full intensity") {
  TempFile input("cli_aff_in.ppm");
  TempFile output("cli_aff_out.pgm");
  write_image(input.path, make_noisy_two_region(10, 12, 9));

  REQUIRE(run_cli("affinity --input " + input.path + " --pos 4,3 --scale 4 --output " +
                  output.path) == 0);
  const Image rendered = read_image(output.path);
  CHECK(rendered.channels == 1);
  CHECK(rendered.pixels[4 * 12 + 3] == 255);
  for (const std::uint8_t p : rendered.pixels) CHECK(p <= 255);

  SUBCASE("a uniform image is affine to everything") {
    Image flat;
    flat.height = 6;
    flat.width = 6;
    flat.channels = 1;
    flat.pixels.assign(36, 99);
    write_image(input.path, flat);
    REQUIRE(run_cli("affinity --input " + input.path + " --pos 2,2 --output " +
                    output.path) == 0);
    const Image all = read_image(output.path);
    for (const std::uint8_t p : all.pixels) CHECK(p == 255);
  }
}

TEST_CASE("cli runs are byte-deterministic for fixed config") {
  TempFile input("cli_det_in.ppm");
  write_image(input.path, make_noisy_two_region(12, 14, 11));

  SUBCASE("filter") {
    TempFile a("cli_det_a.ppm");
    TempFile b("cli_det_b.ppm");
    REQUIRE(run_cli("filter --input " + input.path + " --scale 3 --seed 5 --output " +
                    a.path) == 0);
    REQUIRE(run_cli("filter --input " + input.path + " --scale 3 --seed 5 --output " +
                    b.path) == 0);
    CHECK(slurp(a.path) == slurp(b.path));
  }

  SUBCASE("gradcheck report") {
    TempFile a("cli_det_a.json");
    TempFile b("cli_det_b.json");
    REQUIRE(run_cli("gradcheck --grid 5,5 --instances 2 --seed 7 --output " + a.path) == 0);
    REQUIRE(run_cli("gradcheck --grid 5,5 --instances 2 --seed 7 --output " + b.path) == 0);
    const std::string bytes = slurp(a.path);
    CHECK(bytes == slurp(b.path));
    CHECK(bytes.find("\"pass\": true") != std::string::npos);
  }
}

TEST_CASE("cli gradcheck default run stays under tolerance") {
  TempFile report("cli_gc_default.json");
  // defaults: 16x16 grid (N=256), 20 instances
  REQUIRE(run_cli("gradcheck --output " + report.path) == 0);
  const std::string bytes = slurp(report.path);
  CHECK(bytes.find("\"pass\": true") != std::string::npos);
  CHECK(bytes.find("\"instances_run\": 20") != std::string::npos);
}

TEST_CASE("cli exit codes follow the contract") {
  TempFile input("cli_codes_in.ppm");
  write_image(input.path, make_noisy_two_region(6, 6, 13));

  // usage / parse -> 1
  CHECK(run_cli("no-such-command") == 1);
  CHECK(run_cli("filter --output out.ppm") == 1);           // missing --input
  CHECK(run_cli("filter --input missing.ppm --output o.ppm") == 1);
  CHECK(run_cli("affinity --input " + input.path + " --pos 1x2 --output o.pgm") == 1);
  CHECK(run_cli("bench --sizes '' --reps 5") == 1);
  CHECK(run_cli("bench --sizes 256 --reps 1") == 1);

  // validation -> 2
  CHECK(run_cli("filter --input " + input.path + " --groups 2 --output o.ppm") == 2);
  CHECK(run_cli("affinity --input " + input.path + " --pos 99,0 --output o.pgm") == 2);
  TempFile rank1("cli_rank1.ltf");
  Ltf1Tensor flat;
  flat.dims = {12};
  flat.payload = std::vector<float>(12, 0.5f);
  write_ltf1(rank1.path, flat);
  CHECK(run_cli("filter --input " + rank1.path + " --output o.ltf") == 2);

  // tolerance breach -> 3
  CHECK(run_cli("gradcheck --grid 4,4 --instances 1 --corrupt-blend") == 3);
}
