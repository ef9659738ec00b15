#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "second/backend.hpp"
#include "second/error.hpp"

namespace second {

namespace {

// Keyed by the stage resolution rather than its position in the plan, so a
// given scale sees the same noise under every stage list.
std::mt19937_64 stage_stream(std::uint64_t seed, std::size_t resolution_px) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(resolution_px), 0x5ECDU};
  return std::mt19937_64(seq);
}

GroundTruthMask draw_ellipse(std::size_t side, double area_fraction, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double aspect = std::exp(std::uniform_real_distribution<double>(-0.5, 0.5)(rng));
  const double area = area_fraction * static_cast<double>(side * side);
  const double ry = std::sqrt(area / (M_PI * aspect));
  const double rx = ry * aspect;
  const double cy = ry + unit(rng) * std::max(0.0, static_cast<double>(side) - 2.0 * ry);
  const double cx = rx + unit(rng) * std::max(0.0, static_cast<double>(side) - 2.0 * rx);
  std::vector<std::uint8_t> pixels(side * side, 0);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
      const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
      pixels[y * side + x] = (dx * dx + dy * dy <= 1.0) ? 1 : 0;
    }
  }
  return GroundTruthMask(side, side, std::move(pixels));
}

}  // namespace

StageOutput synthetic_run_stage(const SyntheticCase& c, [[maybe_unused]] std::size_t stage, const PatchGrid& grid,
                                const PatchMask& mask, const SyntheticLogitModel& model) {
  if (!mask.grid().same_layout(grid)) throw Error(Errc::GridMismatch, "mask is not on the stage grid");
  const std::size_t n = grid.patch_count();
  const std::vector<double> g = c.gt.per_patch_avg(grid);

  std::vector<double> self(n, 0.0);
  auto rng = stage_stream(c.seed, grid.height_px());
  std::normal_distribution<double> noise(0.0, c.noise_sigma > 0.0 ? c.noise_sigma : 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    // Draw for every patch so the noise at a patch does not depend on the mask.
    const double eps = c.noise_sigma > 0.0 ? noise(rng) : 0.0;
    self[i] = mask.kept(i) ? std::max(0.0, g[i] * c.signal_gain + eps) : 0.0;
  }

  std::vector<double> row(n, 0.0);
  if (mask.kept_count() > 0) {
    const double w = 1.0 / static_cast<double>(mask.kept_count());
    for (std::size_t i = 0; i < n; ++i) row[i] = mask.kept(i) ? w : 0.0;
  }

  double total = 0.0, on_object = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += self[i];
    on_object += self[i] * g[i];
  }
  const double overlap = total > 0.0 ? on_object / total : 0.0;
  const double evidence = c.gold_yes ? overlap : 1.0 - overlap;
  const double margin = model.a * evidence + model.b;
  const double yes_minus_no = c.gold_yes ? margin : -margin;

  return StageOutput{AttentionMap(grid, std::move(self)), CrossAttentionWeights::single_row(grid, std::move(row)),
                     LogitVector({0.5 * yes_minus_no, -0.5 * yes_minus_no})};
}

std::vector<SyntheticCase> make_synthetic_fixture(const SyntheticFixtureConfig& cfg) {
  if (!(cfg.min_area_fraction > 0.0 && cfg.min_area_fraction <= cfg.max_area_fraction &&
        cfg.max_area_fraction < 0.75)) {
    throw Error(Errc::InvalidArgument, "object area fractions must satisfy 0 < min <= max < 0.75");
  }
  if (cfg.noise_sigma < 0.0) throw Error(Errc::InvalidArgument, "noise_sigma must be nonnegative");
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution gold(cfg.yes_rate);
  std::uniform_real_distribution<double> log_area(std::log(cfg.min_area_fraction), std::log(cfg.max_area_fraction));

  std::vector<SyntheticCase> cases;
  cases.reserve(cfg.case_count);
  for (std::size_t i = 0; i < cfg.case_count; ++i) {
    SyntheticCase c;
    c.id = "case" + std::to_string(i);
    c.gold_yes = gold(rng);
    c.noise_sigma = cfg.noise_sigma;
    c.signal_gain = cfg.signal_gain;
    c.seed = rng();
    const double area = std::exp(log_area(rng));
    GroundTruthMask object = draw_ellipse(cfg.mask_resolution, area, rng);
    c.gt = c.gold_yes ? std::move(object) : GroundTruthMask::empty(cfg.mask_resolution, cfg.mask_resolution);
    cases.push_back(std::move(c));
  }
  return cases;
}

SyntheticBackend::SyntheticBackend(std::vector<SyntheticCase> cases, SyntheticLogitModel model)
    : cases_(std::move(cases)), model_(model) {
  info_.reserve(cases_.size());
  for (const auto& c : cases_) {
    CaseInfo info{c.id, c.gold_yes, std::nullopt};
    if (c.gold_yes) info.gt = c.gt;
    info_.push_back(std::move(info));
  }
}

StageOutput SyntheticBackend::run_stage(std::size_t case_index, std::size_t stage, const PatchGrid& grid,
                                        const PatchMask& mask) const {
  if (case_index >= cases_.size()) throw Error(Errc::MissingCase, "case " + std::to_string(case_index));
  return synthetic_run_stage(cases_[case_index], stage, grid, mask, model_);
}

}  // namespace second
