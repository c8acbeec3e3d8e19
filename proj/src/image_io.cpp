#include "treefilter/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace treefilter {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t offset,
                             const std::string& what) {
  fail(ErrorKind::parse, path + ": " + what + " at byte " + std::to_string(offset));
}

struct Scanner {
  const std::string& bytes;
  const std::string& path;
  std::size_t pos = 0;

  // PNM whitespace; '#' comments run to end of line.
  void skip_space() {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f') {
        ++pos;
      } else {
        break;
      }
    }
  }

  int next_int(const char* field) {
    skip_space();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      parse_fail(path, pos, std::string("expected ") + field);
    }
    long value = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1 << 24) parse_fail(path, pos, std::string(field) + " out of range");
      ++pos;
    }
    return static_cast<int>(value);
  }
};

} // namespace

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::parse, path + ": cannot open file");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    parse_fail(path, 0, "expected P5 or P6 signature");
  }
  Image image;
  image.channels = bytes[1] == '6' ? 3 : 1;

  Scanner scan{bytes, path, 2};
  image.width = scan.next_int("width");
  image.height = scan.next_int("height");
  const int maxval = scan.next_int("maxval");
  if (image.width < 1 || image.height < 1) parse_fail(path, scan.pos, "degenerate image size");
  if (maxval != 255) parse_fail(path, scan.pos, "only maxval 255 is supported");

  // Exactly one whitespace byte separates the header from the raster.
  if (scan.pos >= bytes.size() ||
      !(bytes[scan.pos] == ' ' || bytes[scan.pos] == '\t' || bytes[scan.pos] == '\n' ||
        bytes[scan.pos] == '\r')) {
    parse_fail(path, scan.pos, "expected whitespace before raster");
  }
  ++scan.pos;

  const std::size_t expected =
      static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (bytes.size() - scan.pos != expected) {
    parse_fail(path, scan.pos,
               "raster holds " + std::to_string(bytes.size() - scan.pos) +
                   " bytes, expected " + std::to_string(expected));
  }
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(scan.pos), bytes.end());
  return image;
}

void write_image(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    fail(ErrorKind::validation, "images must have 1 or 3 channels");
  }
  const std::size_t expected =
      static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (image.width < 1 || image.height < 1 || image.pixels.size() != expected) {
    fail(ErrorKind::validation, "image buffer does not match its dimensions");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::validation, path + ": cannot open for writing");
  out << (image.channels == 3 ? "P6" : "P5") << "\n"
      << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) fail(ErrorKind::validation, path + ": short write");
}

FeatureMap image_to_features(const Image& image) {
  FeatureMap features(image.channels, image.height, image.width);
  const std::int64_t n = features.vertex_count();
  for (std::int64_t v = 0; v < n; ++v) {
    for (int c = 0; c < image.channels; ++c) {
      features.data[static_cast<std::size_t>(c) * n + v] =
          image.pixels[static_cast<std::size_t>(v) * image.channels + c] / 255.0;
    }
  }
  return features;
}

Image features_to_image(const FeatureMap& features) {
  if (features.channels != 1 && features.channels != 3) {
    fail(ErrorKind::validation, "only 1- and 3-channel features render to images");
  }
  Image image;
  image.width = features.width;
  image.height = features.height;
  image.channels = features.channels;
  const std::int64_t n = features.vertex_count();
  image.pixels.resize(static_cast<std::size_t>(n) * image.channels);
  for (std::int64_t v = 0; v < n; ++v) {
    for (int c = 0; c < image.channels; ++c) {
      const double scaled =
          std::round(features.data[static_cast<std::size_t>(c) * n + v] * 255.0);
      image.pixels[static_cast<std::size_t>(v) * image.channels + c] =
          static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
    }
  }
  return image;
}

} // namespace treefilter
