#include "second/secd.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "second/error.hpp"

namespace second::secd {

namespace {

constexpr char kMagic[4] = {'S', 'E', 'C', 'D'};
constexpr std::size_t kFixedHeader = 8;
// Refuse anything that would not fit in a 32-bit element count.
constexpr std::uint64_t kMaxElements = std::numeric_limits<std::uint32_t>::max();

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xFFU));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(in[offset + i]) << (8 * i));
  return value;
}

std::uint64_t checked_product(std::span<const std::uint32_t> shape) {
  std::uint64_t n = 1;
  for (std::uint32_t d : shape) {
    if (d != 0 && n > kMaxElements / d) throw Error(Errc::ShapeOverflow, "element count exceeds 2^32 - 1");
    n *= d;
  }
  return n;
}

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  std::size_t n = 1;
  for (std::uint32_t d : shape) n *= d;
  return n;
}

std::vector<std::uint8_t> encode(const Tensor& t) {
  if (t.shape.size() > std::numeric_limits<std::uint8_t>::max()) throw Error(Errc::ShapeOverflow, "too many dims");
  if (checked_product(t.shape) != t.data.size()) {
    throw Error(Errc::ShapeMismatch, "payload has " + std::to_string(t.data.size()) + " elements for the shape");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeader + 4 * t.shape.size() + 4 * t.data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kVersion);
  out.push_back(kDtypeF32);
  out.push_back(static_cast<std::uint8_t>(t.shape.size()));
  for (std::uint32_t d : t.shape) put_le<std::uint32_t>(out, d);
  for (float f : t.data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::BadMagic, "not a SECD file");
  if (bytes.size() < kFixedHeader) throw Error(Errc::TruncatedPayload, "header is cut short");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kVersion) throw Error(Errc::VersionUnsupported, "version " + std::to_string(version));
  const std::uint8_t dtype = bytes[6];
  if (dtype != kDtypeF32) throw Error(Errc::VersionUnsupported, "dtype " + std::to_string(dtype));
  const std::size_t ndim = bytes[7];
  if (bytes.size() < kFixedHeader + 4 * ndim) throw Error(Errc::TruncatedPayload, "dims are cut short");

  Tensor t;
  t.shape.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i) t.shape[i] = get_le<std::uint32_t>(bytes, kFixedHeader + 4 * i);
  const std::uint64_t count = checked_product(t.shape);

  const std::size_t payload_at = kFixedHeader + 4 * ndim;
  const std::uint64_t available = bytes.size() - payload_at;
  if (available < 4 * count) {
    throw Error(Errc::TruncatedPayload, "declared " + std::to_string(count) + " elements, found " +
                                            std::to_string(available / 4));
  }
  if (available > 4 * count) throw Error(Errc::ShapeMismatch, "trailing bytes after payload");
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, payload_at + 4 * i));
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const std::vector<std::uint8_t> bytes = encode(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace second::secd
