#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "second/selection.hpp"
#include "test_util.hpp"

using namespace second;
using second::testing::code_of;

TEST_CASE("selection_fraction") {
  CHECK(selection_fraction(1.0, 1.0) == 1.0);
  CHECK(selection_fraction(0.0, 1.0) == 0.0);
  // (e^0.5 - 1) / (e - 1), evaluated to 30 digits offline
  CHECK(selection_fraction(0.5, 1.0) == doctest::Approx(0.377540668798145435).epsilon(1e-14));
  CHECK(selection_fraction(0.5, 2.0) == doctest::Approx(0.268941421369995121).epsilon(1e-14));

  CHECK(code_of([] { selection_fraction(1.1, 1.0); }) == Errc::OutOfRangeEntropy);
  CHECK(code_of([] { selection_fraction(-0.1, 1.0); }) == Errc::OutOfRangeEntropy);
  CHECK(code_of([] { selection_fraction(0.5, 0.0); }) == Errc::NonPositiveLambda);
  CHECK(code_of([] { selection_fraction(0.5, -1.0); }) == Errc::NonPositiveLambda);
}

TEST_CASE("larger lambda selects fewer patches") {
  for (double h : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    double prev = 2.0;
    for (double lambda = 0.5; lambda <= 7.0; lambda += 0.5) {
      const double p = selection_fraction(h, lambda);
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("select_patches keeps values strictly above the k-th largest") {
  const auto g4 = PatchGrid::make(14, 56, 14);
  const PatchMask half = select_patches(AttentionMap(g4, {4, 3, 2, 1}), 0.5);
  CHECK(half.bits() == std::vector<std::uint8_t>{1, 0, 0, 0});

  const PatchMask ties = select_patches(AttentionMap(g4, {2, 2, 2, 2}), 0.75);
  CHECK(ties.bits() == std::vector<std::uint8_t>{1, 0, 0, 0});

  const PatchMask all = select_patches(AttentionMap(g4, {4, 1, 3, 2}), 1.0);
  CHECK(all.bits() == std::vector<std::uint8_t>{1, 0, 1, 1});
  CHECK(all.kept_count() == 3);

  // fraction 0 still selects one patch
  CHECK(select_patches(AttentionMap(g4, {1, 5, 3, 2}), 0.0).bits() == std::vector<std::uint8_t>{0, 1, 0, 0});
  CHECK(code_of([&] { select_patches(AttentionMap(g4, {1, 2, 3, 4}), 1.5); }) == Errc::OutOfRange);
}

TEST_CASE("select_patches matches the sort oracle and never inverts order") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto grid = PatchGrid::square(84, 14);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(36);
    const bool tie_heavy = trial % 2 == 0;
    for (auto& x : v) x = tie_heavy ? static_cast<double>(rng() % 4) : u(rng);
    const double fraction = u(rng);
    const PatchMask m = select_patches(AttentionMap(grid, v), fraction);
    CHECK(m.bits() == oracle::strict_topk(v, fraction));

    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(36 * fraction)), 1, 36);
    CHECK(m.kept_count() >= 1);
    CHECK(m.kept_count() <= k);
    double min_kept = 1e9, max_dropped = -1e9;
    for (std::size_t i = 0; i < 36; ++i) {
      if (m.kept(i)) min_kept = std::min(min_kept, v[i]);
      else max_dropped = std::max(max_dropped, v[i]);
    }
    CHECK(min_kept >= max_dropped);
  }
}

TEST_CASE("init_masks") {
  const auto four = init_masks(build_stage_plan(336, 14, 4, 1.0));
  REQUIRE(four.size() == 4);
  CHECK(four[0].kept_fraction() == 1.0);
  CHECK(four[0].kept_count() == 36);
  for (std::size_t s = 1; s < 4; ++s) CHECK(four[s].kept_count() == 0);

  const auto two = init_masks(build_stage_plan(336, 14, 2, 1.0));
  CHECK(two[0] == PatchMask::ones(PatchGrid::square(336, 14)));
  CHECK(two[1] == PatchMask::zeros(PatchGrid::square(672, 14)));
}

TEST_CASE("advance_stage") {
  const auto fine = PatchGrid::square(56, 14);    // 4 x 4
  const auto next = PatchGrid::square(28, 14);    // 2 x 2
  const SelectionConfig dynamic{1.0, SelectionMode::Dynamic, 1.0};

  SUBCASE("one-hot accumulator keeps only the argmax block") {
    AttentionAccumulator acc(fine);
    std::vector<double> v(16, 0.0);
    v[15] = 1.0;
    acc = accumulate(acc, AttentionMap(fine, v));
    CHECK(advance_stage(acc, next, dynamic).bits() == std::vector<std::uint8_t>{0, 0, 0, 1});
    CHECK(advance_stage(acc, fine, dynamic).kept_count() == 1);
  }
  SUBCASE("uniform accumulator falls back to the first patch") {
    AttentionAccumulator acc(fine);
    acc = accumulate(acc, AttentionMap(fine, std::vector<double>(16, 1.0)));
    CHECK(advance_stage(acc, next, dynamic).bits() == std::vector<std::uint8_t>{1, 0, 0, 0});
  }
  SUBCASE("modes") {
    AttentionAccumulator acc(fine);
    std::vector<double> v(16);
    for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i * i);
    acc = accumulate(acc, AttentionMap(fine, v));
    CHECK(advance_stage(acc, fine, {1.0, SelectionMode::All, 1.0}).kept_fraction() == 1.0);

    const PatchMask dyn = advance_stage(acc, fine, dynamic);
    const PatchMask rev = advance_stage(acc, fine, {1.0, SelectionMode::Reversed, 1.0});
    CHECK(rev == dyn.complement());

    const PatchMask fixed = advance_stage(acc, fine, {1.0, SelectionMode::Fixed, 0.25});
    CHECK(fixed.kept_count() == 3);  // k = 4, strictly above the 4th largest
  }
  SUBCASE("reversed complements the all-ties fallback") {
    AttentionAccumulator acc(fine);
    acc = accumulate(acc, AttentionMap(fine, std::vector<double>(16, 1.0)));
    const PatchMask rev = advance_stage(acc, fine, {1.0, SelectionMode::Reversed, 1.0});
    CHECK(rev.kept_count() == 15);
    CHECK(rev.bits()[0] == 0);
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { advance_stage(AttentionAccumulator(fine), next, dynamic); }) == Errc::EmptyAccumulator);
    AttentionAccumulator acc(fine);
    acc = accumulate(acc, AttentionMap(fine, std::vector<double>(16, 1.0)));
    CHECK(code_of([&] { advance_stage(acc, next, {0.0, SelectionMode::Dynamic, 1.0}); }) ==
          Errc::NonPositiveLambda);
    CHECK(code_of([&] { advance_stage(acc, next, {1.0, SelectionMode::Fixed, 0.0}); }) == Errc::OutOfRange);
  }
}
