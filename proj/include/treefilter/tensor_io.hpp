#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace treefilter {

// Binary tensor container. Layout, all little-endian:
//   magic "LTF1" | dtype u8 (0 = f32, 1 = f64) | rank u8 (1..4)
//   dims rank x u32 | payload, row-major
struct Ltf1Tensor {
  std::vector<std::uint32_t> dims;
  std::variant<std::vector<float>, std::vector<double>> payload;

  bool is_f64() const { return payload.index() == 1; }
  std::uint64_t element_count() const;
  std::vector<double> as_f64() const; // widens f32 payloads
};

Ltf1Tensor read_ltf1(const std::string& path);
void write_ltf1(const std::string& path, const Ltf1Tensor& tensor);

} // namespace treefilter
