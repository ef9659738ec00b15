#pragma once

// Hallucination and attention-alignment metrics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "second/types.hpp"

namespace second {

// Pixel-level binary object mask.
class GroundTruthMask {
 public:
  GroundTruthMask() = default;
  GroundTruthMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

  static GroundTruthMask empty(std::size_t height, std::size_t width) {
    return GroundTruthMask(height, width, std::vector<std::uint8_t>(height * width, 0));
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
  std::size_t area() const noexcept { return area_; }

  // g_i: the mean of the pixel bits under each patch of `grid`. The grid's
  // rows/cols must divide the mask dimensions.
  std::vector<double> per_patch_avg(const PatchGrid& grid) const;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
  std::size_t area_ = 0;
};

// 2 * sum(a_i g_i) / (sum(a_i) + sum(g_i)) on raw spans, no range checks.
// Throws DegenerateInput when both sums are zero.
double dice_coefficient(std::span<const double> alpha, std::span<const double> g);

// Attention dice against a ground-truth mask. Attention values must already
// lie in [0, 1] (see max_normalize).
double attention_dice(const AttentionMap& attn, const GroundTruthMask& gt);

// a_i / max(a). An all-zero map is returned unchanged.
AttentionMap max_normalize(const AttentionMap& attn);

// 1 - P(y | v, x)
double hallucination_probability(double seq_prob);

struct DiceMonotonicity {
  double dice_before = 0.0;
  double dice_after = 0.0;
  bool direct = false;       // dice_after >= dice_before, computed directly
  bool closed_form = false;  // sum(delta) * (sum(alpha * (1 - g)) + sum(g)) >= 0

  bool agree() const noexcept { return direct == closed_form; }
};

// Checks that adding nonnegative attention on fully-covered object patches
// (g_i == 1) never lowers the dice. Throws HypothesisViolated when delta is
// negative anywhere or touches a patch with g_i < 1.
DiceMonotonicity dice_monotonicity_oracle(const AttentionMap& alpha, const AttentionMap& delta,
                                          const GroundTruthMask& gt);

// Same comparison without the hypothesis check, for exploring what happens
// when attention leaks off the object.
DiceMonotonicity dice_change_unchecked(std::span<const double> alpha, std::span<const double> delta,
                                       std::span<const double> g);

struct DiceCounterexample {
  std::size_t rows = 0, cols = 0;
  std::vector<double> alpha, delta, g;
  DiceMonotonicity result;
};

// Exhaustive search over small grids (up to max_side x max_side) with
// attention levels {0, 1/2, 1} and binary masks for an off-mask increment
// that lowers the dice.
std::optional<DiceCounterexample> search_dice_decrease(std::size_t max_side);

struct PatchStats {
  double mean = 0.0;
  double std = 0.0;
};

// Empirical mean/std of the fraction of set pixels in an m x m patch of
// i.i.d. Bernoulli(p) pixels.
PatchStats bernoulli_patch_stats(double p, std::size_t m, std::size_t trials, std::uint64_t seed);

struct ClassificationReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;

  friend bool operator==(const ClassificationReport&, const ClassificationReport&) = default;
};

struct YesNoAnswer {
  bool predicted_yes;
  bool gold_yes;
};

// "yes" is the positive class. Undefined ratios (0/0) report as 0.
ClassificationReport classification_scores(std::span<const YesNoAnswer> answers);

}  // namespace second
