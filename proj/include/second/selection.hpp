#pragma once

// Entropy-driven patch selection and the per-stage mask update.

#include <cstddef>
#include <vector>

#include "second/attention.hpp"
#include "second/scale_pyramid.hpp"
#include "second/types.hpp"

namespace second {

enum class SelectionMode {
  Dynamic,   // fraction from attention entropy
  Fixed,     // constant fraction
  Reversed,  // complement of the dynamic choice
  All,       // keep every patch
};

struct SelectionConfig {
  double lambda = 1.0;
  SelectionMode mode = SelectionMode::Dynamic;
  double fixed_fraction = 1.0;  // used by Fixed only, in (0, 1]

  void validate() const;
};

// (exp(lambda * H) - 1) / (exp(lambda) - 1)
double selection_fraction(double entropy_h, double lambda);

// k = clamp(floor(n * fraction), 1, n); keeps patches strictly above the k-th
// largest value. If ties leave nothing above the threshold, keeps the
// lowest-index maximum instead.
PatchMask select_patches(const AttentionMap& attn, double fraction);

// Stage 1 sees every patch; later stages start empty.
std::vector<PatchMask> init_masks(const StagePlan& plan);

// Pools the accumulator onto next_grid and derives that stage's mask.
PatchMask advance_stage(const AttentionAccumulator& acc, const PatchGrid& next_grid, const SelectionConfig& cfg);

}  // namespace second
