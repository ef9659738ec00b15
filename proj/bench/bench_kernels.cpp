// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "second/attention.hpp"
#include "second/backend.hpp"
#include "second/harness.hpp"

namespace {

using namespace second;

struct FuseInput {
  AttentionMap self_attn;
  CrossAttentionWeights cross;
};

FuseInput make_fuse_input(std::size_t side, std::size_t tokens) {
  const auto grid = PatchGrid::square(side * 14, 14);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> self(grid.patch_count()), cross(tokens * grid.patch_count());
  for (auto& x : self) x = unit(rng);
  for (auto& x : cross) x = unit(rng);
  return {AttentionMap(grid, std::move(self)), CrossAttentionWeights(grid, tokens, std::move(cross))};
}

void BM_FuseAttention(benchmark::State& state) {
  const FuseInput in = make_fuse_input(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(fuse_attention(in.self_attn, in.cross));
}

void BM_FuseAttentionReference(benchmark::State& state) {
  const FuseInput in = make_fuse_input(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(fuse_attention_reference(in.self_attn, in.cross));
}

BENCHMARK(BM_FuseAttention)->Arg(24)->Arg(48)->Arg(96);
BENCHMARK(BM_FuseAttentionReference)->Arg(24)->Arg(48)->Arg(96);

const SyntheticBackend& fixture() {
  static const SyntheticBackend backend = [] {
    SyntheticFixtureConfig cfg;
    cfg.case_count = 64;
    return SyntheticBackend(make_synthetic_fixture(cfg));
  }();
  return backend;
}

RunConfig run_config() {
  RunConfig cfg;
  cfg.plan = build_stage_plan(336, 14, 4, 1.0);
  return cfg;
}

void BM_RunDataset(benchmark::State& state) {
  const RunConfig cfg = run_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_dataset(fixture(), cfg));
}

void BM_RunDatasetSerial(benchmark::State& state) {
  const RunConfig cfg = run_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_dataset_serial(fixture(), cfg));
}

BENCHMARK(BM_RunDataset)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunDatasetSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
