#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace second {

// A square-patch tiling of an image at one resolution.
class PatchGrid {
 public:
  PatchGrid() = default;

  // Throws NonDivisibleResolution unless patch_px divides both sides.
  static PatchGrid make(std::size_t height_px, std::size_t width_px, std::size_t patch_px);
  static PatchGrid square(std::size_t side_px, std::size_t patch_px) {
    return make(side_px, side_px, patch_px);
  }

  std::size_t height_px() const noexcept { return height_px_; }
  std::size_t width_px() const noexcept { return width_px_; }
  std::size_t patch_px() const noexcept { return patch_px_; }
  std::size_t rows() const noexcept { return height_px_ / patch_px_; }
  std::size_t cols() const noexcept { return width_px_ / patch_px_; }
  std::size_t patch_count() const noexcept { return rows() * cols(); }

  // Only the patch layout matters when aligning per-patch data.
  bool same_layout(const PatchGrid& other) const noexcept {
    return rows() == other.rows() && cols() == other.cols();
  }

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;

 private:
  PatchGrid(std::size_t h, std::size_t w, std::size_t p) : height_px_(h), width_px_(w), patch_px_(p) {}

  std::size_t height_px_ = 0;
  std::size_t width_px_ = 0;
  std::size_t patch_px_ = 1;
};

// Nonnegative per-patch scores, row-major over `grid`.
struct AttentionMap {
  PatchGrid grid;
  std::vector<double> values;
  bool normalized = false;

  AttentionMap() = default;
  AttentionMap(PatchGrid g, std::vector<double> v, bool is_normalized = false);

  static AttentionMap zeros(const PatchGrid& g) {
    return AttentionMap(g, std::vector<double>(g.patch_count(), 0.0));
  }

  double mass() const noexcept;
};

// Binary keep/drop decision per patch.
class PatchMask {
 public:
  PatchMask() = default;
  PatchMask(PatchGrid g, std::vector<std::uint8_t> bits);

  static PatchMask ones(const PatchGrid& g);
  static PatchMask zeros(const PatchGrid& g);

  const PatchGrid& grid() const noexcept { return grid_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  bool kept(std::size_t i) const { return bits_.at(i) != 0; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t kept_count() const noexcept { return kept_count_; }
  double kept_fraction() const noexcept {
    return bits_.empty() ? 0.0 : static_cast<double>(kept_count_) / static_cast<double>(bits_.size());
  }

  PatchMask complement() const;
  PatchMask union_with(const PatchMask& other) const;

  friend bool operator==(const PatchMask& a, const PatchMask& b) {
    return a.grid_.same_layout(b.grid_) && a.bits_ == b.bits_;
  }

 private:
  PatchGrid grid_;
  std::vector<std::uint8_t> bits_;
  std::size_t kept_count_ = 0;
};

}  // namespace second
