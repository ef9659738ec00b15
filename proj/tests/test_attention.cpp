#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "second/attention.hpp"
#include "test_util.hpp"

using namespace second;
using second::testing::code_of;

namespace {

const PatchGrid k2 = PatchGrid::make(14, 28, 14);  // 1 x 2
const PatchGrid k4 = PatchGrid::square(28, 14);    // 2 x 2

}  // namespace

TEST_CASE("fuse_attention multiplies and sums over cross rows") {
  const AttentionMap self(k2, {0.5, 0.5});
  CHECK(fuse_attention(self, CrossAttentionWeights::single_row(k2, {1, 1})).values == self.values);
  CHECK(fuse_attention(AttentionMap::zeros(k2), CrossAttentionWeights(k2, 2, {3, 1, 2, 5})).values ==
        std::vector<double>{0, 0});
  const AttentionMap fused = fuse_attention(self, CrossAttentionWeights(k2, 2, {1, 0, 0, 2}));
  CHECK(fused.values[0] == doctest::Approx(0.5));
  CHECK(fused.values[1] == doctest::Approx(1.0));
  CHECK_FALSE(fused.normalized);

  CHECK(code_of([&] { fuse_attention(self, CrossAttentionWeights::single_row(k4, {1, 1, 1, 1})); }) ==
        Errc::GridMismatch);
  CHECK(code_of([&] { fuse_attention(self, CrossAttentionWeights(k2, 0, {})); }) == Errc::EmptyCrossAttention);
}

TEST_CASE("fuse_attention is linear in cross rows and matches the serial reference") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t side : {1, 6, 48, 96}) {
    const auto grid = PatchGrid::square(14 * side, 14);
    const std::size_t n = grid.patch_count();
    std::vector<double> s(n), a(3 * n), b(2 * n);
    for (auto& x : s) x = u(rng);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const AttentionMap self(grid, s);
    const CrossAttentionWeights ca(grid, 3, a), cb(grid, 2, b), cab(grid, 5, ab);

    const auto fa = fuse_attention(self, ca), fb = fuse_attention(self, cb), fab = fuse_attention(self, cab);
    for (std::size_t i = 0; i < n; ++i) CHECK(fab.values[i] == doctest::Approx(fa.values[i] + fb.values[i]));
    CHECK(fab.values == fuse_attention_reference(self, cab).values);
  }
}

TEST_CASE("normalize") {
  CHECK(normalize(AttentionMap(k2, {2, 2})).values == std::vector<double>{0.5, 0.5});
  const auto one_hot = normalize(AttentionMap(PatchGrid::make(14, 42, 14), {1, 0, 0}));
  CHECK(one_hot.values == std::vector<double>{1, 0, 0});
  CHECK(one_hot.normalized);
  const auto n = normalize(AttentionMap(k2, {1, 3}));
  CHECK(n.values[0] == doctest::Approx(0.25));
  CHECK(n.values[1] == doctest::Approx(0.75));
  CHECK(code_of([] { normalize(AttentionMap::zeros(k2)); }) == Errc::ZeroMassAttention);
}

TEST_CASE("entropy is normalized to [0, 1]") {
  const auto grid = PatchGrid::square(84, 14);
  CHECK(entropy(normalize(AttentionMap(grid, std::vector<double>(36, 1.0)))) == doctest::Approx(1.0));
  std::vector<double> hot(36, 0.0);
  hot[17] = 5.0;
  CHECK(entropy(normalize(AttentionMap(grid, hot))) == 0.0);
  CHECK(entropy(normalize(AttentionMap(k4, {0.5, 0.5, 0, 0}))) == doctest::Approx(std::log(2.0) / std::log(4.0)));
  CHECK(entropy(normalize(AttentionMap(k4, {0.5, 0.5, 0, 0}))) == doctest::Approx(0.5));

  CHECK(code_of([] { entropy(AttentionMap(k2, {0.5, 0.5})); }) == Errc::NotNormalized);
  CHECK(code_of([] { entropy(AttentionMap(PatchGrid::square(14, 14), {1.0}, true)); }) == Errc::SinglePatchGrid);
}

TEST_CASE("entropy properties on random maps") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const auto grid = PatchGrid::square(56, 14);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(16);
    for (auto& x : v) x = u(rng);
    const double h = entropy(normalize(AttentionMap(grid, v)));
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);

    std::vector<double> shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(entropy(normalize(AttentionMap(grid, shuffled))) == doctest::Approx(h).epsilon(1e-12));

    // Moving mass from a smaller entry to a larger one concentrates the map.
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo == *hi) continue;
    std::vector<double> moved = v;
    const double amount = 0.5 * *lo;
    moved[static_cast<std::size_t>(lo - v.begin())] -= amount;
    moved[static_cast<std::size_t>(hi - v.begin())] += amount;
    CHECK(entropy(normalize(AttentionMap(grid, moved))) < h);
  }
}

TEST_CASE("accumulate adds unit mass on the finest grid") {
  const auto coarse = PatchGrid::square(84, 14), fine = PatchGrid::square(168, 14);
  AttentionAccumulator acc(fine);
  CHECK(acc.empty());

  const auto once = accumulate(acc, AttentionMap(coarse, std::vector<double>(36, 3.0)));
  for (double v : once.values) CHECK(v == doctest::Approx(1.0 / 144.0));
  const auto twice = accumulate(once, AttentionMap(coarse, std::vector<double>(36, 3.0)));
  for (std::size_t i = 0; i < twice.values.size(); ++i) CHECK(twice.values[i] == 2.0 * once.values[i]);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AttentionAccumulator running(fine);
  for (int k = 1; k <= 8; ++k) {
    const PatchGrid& g = (k % 2) ? coarse : fine;
    std::vector<double> v(g.patch_count());
    for (auto& x : v) x = u(rng);
    const auto before = running.values;
    running = accumulate(running, AttentionMap(g, v));
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(running.values[i] >= before[i]);
    CHECK(std::abs(running.as_map().mass() - k) <= 1e-9);
  }
  CHECK(running.additions == 8);

  CHECK(code_of([&] { accumulate(acc, AttentionMap::zeros(PatchGrid::square(70, 14))); }) == Errc::GridMismatch);
}
