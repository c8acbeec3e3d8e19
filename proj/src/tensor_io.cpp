#include "treefilter/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "treefilter/error.hpp"

namespace treefilter {

namespace {

constexpr char kMagic[4] = {'L', 'T', 'F', '1'};

[[noreturn]] void parse_fail(const std::string& path, std::size_t offset,
                             const std::string& what) {
  fail(ErrorKind::parse, path + ": " + what + " at byte " + std::to_string(offset));
}

void put_u32(std::string& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& bytes, std::size_t offset) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    value |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

} // namespace

std::uint64_t Ltf1Tensor::element_count() const {
  std::uint64_t count = 1;
  for (const std::uint32_t d : dims) count *= d;
  return count;
}

std::vector<double> Ltf1Tensor::as_f64() const {
  if (is_f64()) return std::get<std::vector<double>>(payload);
  const auto& f = std::get<std::vector<float>>(payload);
  return {f.begin(), f.end()};
}

Ltf1Tensor read_ltf1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::parse, path + ": cannot open file");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 6) parse_fail(path, bytes.size(), "truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) parse_fail(path, 0, "bad magic, want LTF1");

  const auto dtype = static_cast<std::uint8_t>(bytes[4]);
  if (dtype > 1) parse_fail(path, 4, "unknown dtype code " + std::to_string(dtype));
  const auto rank = static_cast<std::uint8_t>(bytes[5]);
  if (rank < 1 || rank > 4) parse_fail(path, 5, "rank must be in [1,4], got " + std::to_string(rank));

  std::size_t offset = 6;
  if (bytes.size() < offset + 4u * rank) parse_fail(path, bytes.size(), "truncated dims");
  Ltf1Tensor tensor;
  std::uint64_t count = 1;
  for (int i = 0; i < rank; ++i) {
    const std::uint32_t d = get_u32(bytes, offset);
    if (d == 0) parse_fail(path, offset, "zero-length dimension");
    tensor.dims.push_back(d);
    count *= d;
    // guards the element-count product against wrap-around from crafted dims
    if (count > (std::uint64_t{1} << 40)) parse_fail(path, offset, "tensor too large");
    offset += 4;
  }

  const std::size_t element_size = dtype == 0 ? 4 : 8;
  const std::uint64_t payload_bytes = count * element_size;
  if (bytes.size() != offset + payload_bytes) {
    parse_fail(path, offset,
               "payload holds " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                   std::to_string(payload_bytes));
  }

  static_assert(std::endian::native == std::endian::little,
                "payload decode assumes a little-endian host");
  if (dtype == 0) {
    std::vector<float> values(count);
    std::memcpy(values.data(), bytes.data() + offset, payload_bytes);
    tensor.payload = std::move(values);
  } else {
    std::vector<double> values(count);
    std::memcpy(values.data(), bytes.data() + offset, payload_bytes);
    tensor.payload = std::move(values);
  }
  return tensor;
}

void write_ltf1(const std::string& path, const Ltf1Tensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 4) {
    fail(ErrorKind::validation, "tensor rank must be in [1,4]");
  }
  std::uint64_t count = 1;
  for (const std::uint32_t d : tensor.dims) {
    if (d == 0) fail(ErrorKind::validation, "tensor dimensions must be positive");
    count *= d;
  }
  const std::size_t stored = tensor.is_f64()
                                 ? std::get<std::vector<double>>(tensor.payload).size()
                                 : std::get<std::vector<float>>(tensor.payload).size();
  if (stored != count) {
    fail(ErrorKind::validation, "tensor payload holds " + std::to_string(stored) +
                                    " elements for dims product " + std::to_string(count));
  }

  std::string bytes;
  bytes.append(kMagic, 4);
  bytes.push_back(tensor.is_f64() ? char(1) : char(0));
  bytes.push_back(static_cast<char>(tensor.dims.size()));
  for (const std::uint32_t d : tensor.dims) put_u32(bytes, d);

  static_assert(std::endian::native == std::endian::little,
                "payload encode assumes a little-endian host");
  const std::size_t header = bytes.size();
  if (tensor.is_f64()) {
    const auto& values = std::get<std::vector<double>>(tensor.payload);
    bytes.resize(header + values.size() * 8);
    std::memcpy(bytes.data() + header, values.data(), values.size() * 8);
  } else {
    const auto& values = std::get<std::vector<float>>(tensor.payload);
    bytes.resize(header + values.size() * 4);
    std::memcpy(bytes.data() + header, values.data(), values.size() * 4);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::validation, path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::validation, path + ": short write");
}

} // namespace treefilter
