#include "second/selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "second/error.hpp"

namespace second {

void SelectionConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::NonPositiveLambda, "lambda must be positive");
  if (mode == SelectionMode::Fixed && !(fixed_fraction > 0.0 && fixed_fraction <= 1.0)) {
    throw Error(Errc::OutOfRange, "fixed selection fraction must lie in (0, 1]");
  }
}

double selection_fraction(double entropy_h, double lambda) {
  if (!(entropy_h >= 0.0 && entropy_h <= 1.0)) {
    throw Error(Errc::OutOfRangeEntropy, "entropy " + std::to_string(entropy_h) + " outside [0, 1]");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::NonPositiveLambda, "lambda must be positive");
  return std::expm1(lambda * entropy_h) / std::expm1(lambda);
}

PatchMask select_patches(const AttentionMap& attn, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(Errc::OutOfRange, "selection fraction outside [0, 1]");
  const std::size_t n = attn.values.size();
  if (n == 0) throw Error(Errc::EmptyGrid, "cannot select from an empty map");
  const auto wanted = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  const std::size_t k = std::clamp<std::size_t>(wanted, 1, n);

  std::vector<double> scratch = attn.values;
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end(),
                   std::greater<>());
  const double threshold = scratch[k - 1];

  std::vector<std::uint8_t> bits(n, 0);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (attn.values[i] > threshold) {
      bits[i] = 1;
      any = true;
    }
  }
  if (!any) {
    const auto top = std::max_element(attn.values.begin(), attn.values.end());
    bits[static_cast<std::size_t>(top - attn.values.begin())] = 1;
  }
  return PatchMask(attn.grid, std::move(bits));
}

std::vector<PatchMask> init_masks(const StagePlan& plan) {
  std::vector<PatchMask> masks;
  masks.reserve(plan.stage_count());
  for (std::size_t s = 0; s < plan.stage_count(); ++s) {
    masks.push_back(s == 0 ? PatchMask::ones(plan.stages[s]) : PatchMask::zeros(plan.stages[s]));
  }
  return masks;
}

PatchMask advance_stage(const AttentionAccumulator& acc, const PatchGrid& next_grid, const SelectionConfig& cfg) {
  cfg.validate();
  if (acc.empty()) throw Error(Errc::EmptyAccumulator, "no stage attention has been accumulated");
  if (cfg.mode == SelectionMode::All) return PatchMask::ones(next_grid);

  const AttentionMap pooled = pool_attention(acc.as_map(), acc.finest_grid, next_grid);
  if (cfg.mode == SelectionMode::Fixed) return select_patches(pooled, cfg.fixed_fraction);

  const double fraction = selection_fraction(entropy(normalize(pooled)), cfg.lambda);
  PatchMask dynamic = select_patches(pooled, fraction);
  if (cfg.mode == SelectionMode::Dynamic) return dynamic;

  PatchMask reversed = dynamic.complement();
  if (reversed.kept_count() > 0) return reversed;
  // Dynamic kept everything; fall back to the single least-attended patch.
  std::vector<std::uint8_t> bits(next_grid.patch_count(), 0);
  const auto low = std::min_element(pooled.values.begin(), pooled.values.end());
  bits[static_cast<std::size_t>(low - pooled.values.begin())] = 1;
  return PatchMask(next_grid, std::move(bits));
}

}  // namespace second
