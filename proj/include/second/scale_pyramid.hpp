#pragma once

// Multi-scale patch grids and the mappings between them.
//
// Stages double in resolution, so every cross-scale mapping is an exact
// integer block mapping: a coarse patch covers a k x k block of fine patches.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "second/contrastive.hpp"
#include "second/types.hpp"

namespace second {

struct StagePlan {
  std::vector<PatchGrid> stages;  // coarsest first
  double lambda = 1.0;
  CDConfig cd;

  std::size_t stage_count() const noexcept { return stages.size(); }
  const PatchGrid& finest() const { return stages.back(); }

  // Builds a plan from explicit square resolutions, e.g. {84, 168, 336, 672}.
  // Accepts 1..5 stages; each must be exactly twice the previous.
  static StagePlan from_resolutions(std::span<const std::size_t> resolutions, std::size_t patch_px,
                                    double lambda, const CDConfig& cd);
};

// Stages end at 2 * base_resolution and halve downwards, so (336, 14, 4)
// yields 84-168-336-672. Throws NonDivisibleResolution when a stage is not a
// whole number of patches.
StagePlan build_stage_plan(std::size_t base_resolution, std::size_t patch_px, std::size_t stage_count,
                           double lambda, const CDConfig& cd = {});

// Replicates each coarse bit onto its block of fine patches.
PatchMask upsample_mask(const PatchMask& mask, const PatchGrid& from, const PatchGrid& to);

enum class PoolMode {
  // Downscale sums each block, upscale spreads a value evenly over its block.
  // Total mass is invariant in both directions.
  MassConserving,
  // Downscale averages each block, upscale replicates. Preserves the mean.
  Mean,
};

AttentionMap pool_attention(const AttentionMap& attn, const PatchGrid& from, const PatchGrid& to,
                            PoolMode mode = PoolMode::MassConserving);

enum class ClsStyle {
  ClsPreserved,  // CLIP-style: a class token rides along, never resampled
  FullInterp,    // SigLIP-style: every embedding is positional
};

struct PositionalEmbeddingGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // row-major, rows * cols * dim
  ClsStyle style = ClsStyle::FullInterp;
  std::optional<std::vector<double>> cls_embedding;

  void validate() const;

  double at(std::size_t r, std::size_t c, std::size_t d) const { return values[(r * cols + c) * dim + d]; }
};

// Per-channel bilinear resampling with cell-centre alignment: output cell
// (r, c) samples the source at ((r + 0.5) * R / rows - 0.5, ...) with edge
// clamping. A class embedding is copied through unchanged.
PositionalEmbeddingGrid interpolate_positional_embeddings(const PositionalEmbeddingGrid& src,
                                                          std::size_t target_rows, std::size_t target_cols);

}  // namespace second
