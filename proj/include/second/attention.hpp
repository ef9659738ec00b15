#pragma once

// Fusion of encoder self-attention with language-model cross-attention, and
// the cross-stage accumulator that lives on the finest grid.

#include <cstddef>
#include <span>
#include <vector>

#include "second/scale_pyramid.hpp"
#include "second/types.hpp"

namespace second {

// One row per generated token, each a weight over the visual patches.
class CrossAttentionWeights {
 public:
  CrossAttentionWeights() = default;
  CrossAttentionWeights(PatchGrid grid, std::size_t token_count, std::vector<double> weights);

  static CrossAttentionWeights single_row(PatchGrid grid, std::vector<double> row) {
    return CrossAttentionWeights(grid, 1, std::move(row));
  }

  const PatchGrid& grid() const noexcept { return grid_; }
  std::size_t token_count() const noexcept { return token_count_; }
  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(weights_).subspan(t * grid_.patch_count(), grid_.patch_count());
  }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  PatchGrid grid_;
  std::size_t token_count_ = 0;
  std::vector<double> weights_;
};

// VisualAttn_i = sum_t cross[t][i] * self_i. Unnormalized.
// Patches are processed in parallel for large grids; each patch sums its rows
// in token order, so the result matches fuse_attention_reference exactly.
AttentionMap fuse_attention(const AttentionMap& self_attn, const CrossAttentionWeights& cross);

// Serial row-by-row accumulation, kept as the test oracle for fuse_attention.
AttentionMap fuse_attention_reference(const AttentionMap& self_attn, const CrossAttentionWeights& cross);

// Rescales to unit mass. Throws ZeroMassAttention.
AttentionMap normalize(const AttentionMap& attn);

// Shannon entropy divided by ln(n), so the result lies in [0, 1].
double entropy(const AttentionMap& attn);

struct AttentionAccumulator {
  PatchGrid finest_grid;
  std::vector<double> values;
  std::size_t additions = 0;

  explicit AttentionAccumulator(const PatchGrid& finest)
      : finest_grid(finest), values(finest.patch_count(), 0.0) {}

  bool empty() const noexcept { return additions == 0; }
  AttentionMap as_map() const { return AttentionMap(finest_grid, values); }
};

// Normalizes the stage map, maps it onto the finest grid and adds it, so every
// stage contributes unit mass regardless of its patch count.
AttentionAccumulator accumulate(AttentionAccumulator acc, const AttentionMap& stage_attn);

}  // namespace second
