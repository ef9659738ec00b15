#include "second/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "second/error.hpp"

namespace second {

GroundTruthMask::GroundTruthMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (pixels_.size() != height_ * width_) {
    throw Error(Errc::ShapeMismatch, "mask has " + std::to_string(pixels_.size()) + " pixels, expected " +
                                         std::to_string(height_ * width_));
  }
  for (auto& p : pixels_) p = p ? 1 : 0;
  area_ = static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
}

std::vector<double> GroundTruthMask::per_patch_avg(const PatchGrid& grid) const {
  const std::size_t rows = grid.rows(), cols = grid.cols();
  if (rows == 0 || cols == 0 || height_ % rows != 0 || width_ % cols != 0) {
    throw Error(Errc::GridMismatch, std::to_string(height_) + "x" + std::to_string(width_) +
                                        " mask cannot be tiled by a " + std::to_string(rows) + "x" +
                                        std::to_string(cols) + " grid");
  }
  const std::size_t ph = height_ / rows, pw = width_ / cols;
  std::vector<std::size_t> counts(rows * cols, 0);
  for (std::size_t y = 0; y < height_; ++y) {
    const std::uint8_t* line = &pixels_[y * width_];
    std::size_t* dst = &counts[(y / ph) * cols];
    for (std::size_t x = 0; x < width_; ++x) dst[x / pw] += line[x];
  }
  std::vector<double> g(counts.size());
  const double per_patch = static_cast<double>(ph * pw);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(counts[i]) / per_patch;
  return g;
}

double dice_coefficient(std::span<const double> alpha, std::span<const double> g) {
  if (alpha.size() != g.size()) throw Error(Errc::LengthMismatch, "attention and mask lengths differ");
  double overlap = 0.0, sum_alpha = 0.0, sum_g = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    overlap += alpha[i] * g[i];
    sum_alpha += alpha[i];
    sum_g += g[i];
  }
  if (!(sum_alpha + sum_g > 0.0)) throw Error(Errc::DegenerateInput, "attention and mask are both empty");
  return 2.0 * overlap / (sum_alpha + sum_g);
}

double attention_dice(const AttentionMap& attn, const GroundTruthMask& gt) {
  for (double a : attn.values) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error(Errc::OutOfRange, "dice needs attention values in [0, 1]");
  }
  const std::vector<double> g = gt.per_patch_avg(attn.grid);
  return dice_coefficient(attn.values, g);
}

AttentionMap max_normalize(const AttentionMap& attn) {
  const double peak = attn.values.empty() ? 0.0 : *std::max_element(attn.values.begin(), attn.values.end());
  if (!(peak > 0.0)) return attn;
  AttentionMap out = attn;
  for (double& v : out.values) v /= peak;
  out.normalized = false;
  return out;
}

double hallucination_probability(double seq_prob) {
  if (!(seq_prob > 0.0 && seq_prob <= 1.0)) {
    throw Error(Errc::OutOfRange, "sequence probability " + std::to_string(seq_prob) + " outside (0, 1]");
  }
  return 1.0 - seq_prob;
}

DiceMonotonicity dice_change_unchecked(std::span<const double> alpha, std::span<const double> delta,
                                       std::span<const double> g) {
  if (alpha.size() != delta.size() || alpha.size() != g.size()) {
    throw Error(Errc::LengthMismatch, "alpha, delta and g must have equal length");
  }
  std::vector<double> after(alpha.size());
  double overlap = 0.0, sum_alpha = 0.0, sum_g = 0.0, added = 0.0, added_on_mask = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    after[i] = alpha[i] + delta[i];
    overlap += alpha[i] * g[i];
    sum_alpha += alpha[i];
    sum_g += g[i];
    added += delta[i];
    added_on_mask += delta[i] * g[i];
  }
  DiceMonotonicity out;
  out.dice_before = dice_coefficient(alpha, g);
  out.dice_after = dice_coefficient(after, g);
  out.direct = out.dice_after >= out.dice_before;
  // Cross-multiplied form of dice_after >= dice_before.
  out.closed_form = added_on_mask * (sum_alpha + sum_g) >= overlap * added;
  return out;
}

DiceMonotonicity dice_monotonicity_oracle(const AttentionMap& alpha, const AttentionMap& delta,
                                          const GroundTruthMask& gt) {
  if (!alpha.grid.same_layout(delta.grid)) throw Error(Errc::GridMismatch, "alpha and delta grids differ");
  const std::vector<double> g = gt.per_patch_avg(alpha.grid);
  double added = 0.0, off_mask_alpha = 0.0, sum_g = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (delta.values[i] < 0.0) throw Error(Errc::HypothesisViolated, "negative increment at patch " + std::to_string(i));
    if (delta.values[i] > 0.0 && g[i] != 1.0) {
      throw Error(Errc::HypothesisViolated, "increment on patch " + std::to_string(i) + " with g = " + std::to_string(g[i]));
    }
    added += delta.values[i];
    off_mask_alpha += alpha.values[i] * (1.0 - g[i]);
    sum_g += g[i];
  }
  DiceMonotonicity out = dice_change_unchecked(alpha.values, delta.values, g);
  // 0 <= sum_mask(delta) * (sum_~mask(alpha) + area(mask))
  out.closed_form = 0.0 <= added * (off_mask_alpha + sum_g);
  return out;
}

std::optional<DiceCounterexample> search_dice_decrease(std::size_t max_side) {
  static constexpr double kLevels[] = {0.0, 0.5, 1.0};
  for (std::size_t rows = 1; rows <= max_side; ++rows) {
    for (std::size_t cols = 1; cols <= max_side; ++cols) {
      const std::size_t n = rows * cols;
      if (n < 2 || n > 6) continue;
      std::size_t alpha_combos = 1;
      for (std::size_t i = 0; i < n; ++i) alpha_combos *= 3;
      for (std::size_t gbits = 1; gbits < (std::size_t{1} << n); ++gbits) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>((gbits >> i) & 1U);
        for (std::size_t code = 0; code < alpha_combos; ++code) {
          std::vector<double> alpha(n);
          std::size_t c = code;
          for (std::size_t i = 0; i < n; ++i, c /= 3) alpha[i] = kLevels[c % 3];
          for (std::size_t j = 0; j < n; ++j) {
            if (g[j] != 0.0) continue;
            std::vector<double> delta(n, 0.0);
            delta[j] = 1.0;
            const DiceMonotonicity r = dice_change_unchecked(alpha, delta, g);
            if (!r.direct) return DiceCounterexample{rows, cols, alpha, delta, g, r};
          }
        }
      }
    }
  }
  return std::nullopt;
}

PatchStats bernoulli_patch_stats(double p, std::size_t m, std::size_t trials, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::OutOfRange, "p must lie in (0, 1)");
  if (m == 0 || trials < 2) throw Error(Errc::InvalidArgument, "need m >= 1 and at least two trials");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution pixel(p);
  const std::size_t pixels = m * m;
  // Welford keeps the variance accurate for large trial counts.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t on = 0;
    for (std::size_t k = 0; k < pixels; ++k) on += pixel(rng) ? 1 : 0;
    const double g = static_cast<double>(on) / static_cast<double>(pixels);
    const double d = g - mean;
    mean += d / static_cast<double>(t + 1);
    m2 += d * (g - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(trials - 1))};
}

ClassificationReport classification_scores(std::span<const YesNoAnswer> answers) {
  if (answers.empty()) throw Error(Errc::EmptyDataset, "no answers to score");
  ClassificationReport r;
  for (const auto& a : answers) {
    if (a.predicted_yes && a.gold_yes) ++r.tp;
    else if (a.predicted_yes) ++r.fp;
    else if (a.gold_yes) ++r.fn;
    else ++r.tn;
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.accuracy = ratio(r.tp + r.tn, answers.size());
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace second
