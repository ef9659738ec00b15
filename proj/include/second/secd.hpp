#pragma once

// SECD tensor files (little-endian):
//
//   offset  size        field
//   0       4           magic "SECD"
//   4       2 (u16)     version, currently 1
//   6       1 (u8)      dtype, 1 = f32
//   7       1 (u8)      ndim
//   8       4 * ndim    dims (u32), outermost first
//   ...     4 * prod    row-major f32 payload
//
// Trailing bytes after the payload are rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace second::secd {

inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;

struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t element_count() const noexcept;
  std::vector<double> as_doubles() const { return {data.begin(), data.end()}; }
};

std::vector<std::uint8_t> encode(const Tensor& t);
Tensor decode(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace second::secd
