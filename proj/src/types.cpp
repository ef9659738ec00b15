#include "second/types.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "second/error.hpp"

namespace second {

PatchGrid PatchGrid::make(std::size_t height_px, std::size_t width_px, std::size_t patch_px) {
  if (patch_px == 0 || height_px == 0 || width_px == 0) {
    throw Error(Errc::EmptyGrid, "zero-sized grid or patch");
  }
  if (height_px % patch_px != 0 || width_px % patch_px != 0) {
    throw Error(Errc::NonDivisibleResolution,
                std::to_string(height_px) + "x" + std::to_string(width_px) +
                    " is not a multiple of patch size " + std::to_string(patch_px));
  }
  return PatchGrid(height_px, width_px, patch_px);
}

AttentionMap::AttentionMap(PatchGrid g, std::vector<double> v, bool is_normalized)
    : grid(g), values(std::move(v)), normalized(is_normalized) {
  if (values.size() != grid.patch_count()) {
    throw Error(Errc::GridMismatch, "attention has " + std::to_string(values.size()) +
                                        " values for " + std::to_string(grid.patch_count()) + " patches");
  }
  for (double x : values) {
    if (!(x >= 0.0)) throw Error(Errc::OutOfRange, "attention values must be finite and nonnegative");
  }
}

double AttentionMap::mass() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

PatchMask::PatchMask(PatchGrid g, std::vector<std::uint8_t> bits) : grid_(g), bits_(std::move(bits)) {
  if (bits_.size() != grid_.patch_count()) {
    throw Error(Errc::GridMismatch, "mask has " + std::to_string(bits_.size()) + " bits for " +
                                        std::to_string(grid_.patch_count()) + " patches");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
  kept_count_ = static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PatchMask PatchMask::ones(const PatchGrid& g) {
  return PatchMask(g, std::vector<std::uint8_t>(g.patch_count(), 1));
}

PatchMask PatchMask::zeros(const PatchGrid& g) {
  return PatchMask(g, std::vector<std::uint8_t>(g.patch_count(), 0));
}

PatchMask PatchMask::complement() const {
  std::vector<std::uint8_t> out(bits_.size());
  std::transform(bits_.begin(), bits_.end(), out.begin(), [](std::uint8_t b) -> std::uint8_t { return b ? 0 : 1; });
  return PatchMask(grid_, std::move(out));
}

PatchMask PatchMask::union_with(const PatchMask& other) const {
  if (!grid_.same_layout(other.grid_)) throw Error(Errc::GridMismatch, "mask union over different grids");
  std::vector<std::uint8_t> out(bits_.size());
  for (std::size_t i = 0; i < bits_.size(); ++i) out[i] = (bits_[i] | other.bits_[i]);
  return PatchMask(grid_, std::move(out));
}

}  // namespace second
