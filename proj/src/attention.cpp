#include "second/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "second/error.hpp"

namespace second {

namespace {

// Below this many multiply-adds the thread fan-out costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void check_fusable(const AttentionMap& self_attn, const CrossAttentionWeights& cross) {
  if (!self_attn.grid.same_layout(cross.grid())) {
    throw Error(Errc::GridMismatch, "self-attention and cross-attention grids differ");
  }
  if (cross.token_count() == 0) throw Error(Errc::EmptyCrossAttention, "no cross-attention rows");
}

}  // namespace

CrossAttentionWeights::CrossAttentionWeights(PatchGrid grid, std::size_t token_count, std::vector<double> weights)
    : grid_(grid), token_count_(token_count), weights_(std::move(weights)) {
  if (weights_.size() != token_count_ * grid_.patch_count()) {
    throw Error(Errc::GridMismatch, "cross-attention has " + std::to_string(weights_.size()) + " weights for " +
                                        std::to_string(token_count_) + " rows of " +
                                        std::to_string(grid_.patch_count()) + " patches");
  }
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error(Errc::OutOfRange, "cross-attention weights must be finite and nonnegative");
  }
}

AttentionMap fuse_attention(const AttentionMap& self_attn, const CrossAttentionWeights& cross) {
  check_fusable(self_attn, cross);
  const std::size_t n = self_attn.values.size();
  const std::size_t rows = cross.token_count();
  const double* w = cross.weights().data();
  const double* s = self_attn.values.data();
  std::vector<double> out(n, 0.0);
  // Threads take contiguous patch blocks and sweep the token rows inside each
  // block, so reads stay sequential. Per patch the rows are still summed in
  // order, which keeps the result bit-identical to the reference.
  constexpr std::size_t kBlock = 512;
  const auto blocks = static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static) if (n * rows >= kParallelWork)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    for (std::size_t t = 0; t < rows; ++t) {
      const double* row = w + t * n;
      for (std::size_t i = lo; i < hi; ++i) out[i] = out[i] + row[i] * s[i];
    }
  }
  return AttentionMap(self_attn.grid, std::move(out));
}

AttentionMap fuse_attention_reference(const AttentionMap& self_attn, const CrossAttentionWeights& cross) {
  check_fusable(self_attn, cross);
  AttentionMap visual = AttentionMap::zeros(self_attn.grid);
  for (std::size_t t = 0; t < cross.token_count(); ++t) {
    const auto weight = cross.row(t);
    for (std::size_t i = 0; i < visual.values.size(); ++i) {
      visual.values[i] = visual.values[i] + weight[i] * self_attn.values[i];
    }
  }
  return visual;
}

AttentionMap normalize(const AttentionMap& attn) {
  const double total = attn.mass();
  if (!(total > 0.0)) throw Error(Errc::ZeroMassAttention, "cannot normalize an all-zero attention map");
  AttentionMap out = attn;
  for (double& v : out.values) v /= total;
  out.normalized = true;
  return out;
}

double entropy(const AttentionMap& attn) {
  if (!attn.normalized) throw Error(Errc::NotNormalized, "entropy needs a normalized attention map");
  const std::size_t n = attn.values.size();
  if (n < 2) throw Error(Errc::SinglePatchGrid, "entropy is undefined on a single patch");
  double h = 0.0;
  for (double p : attn.values) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(n)), 0.0, 1.0);
}

AttentionAccumulator accumulate(AttentionAccumulator acc, const AttentionMap& stage_attn) {
  // Mass-conserving pooling is linear, so pooling first gives the same map and
  // reports a grid mismatch before a zero-mass error.
  const AttentionMap pooled = normalize(pool_attention(stage_attn, stage_attn.grid, acc.finest_grid));
  for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += pooled.values[i];
  ++acc.additions;
  return acc;
}

}  // namespace second
