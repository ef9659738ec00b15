#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "second/config.hpp"
#include "second/harness.hpp"
#include "test_util.hpp"

using namespace second;
using second::testing::code_of;

namespace {

SyntheticBackend small_fixture(std::size_t count, double sigma, std::uint64_t seed = 7) {
  SyntheticFixtureConfig cfg;
  cfg.case_count = count;
  cfg.noise_sigma = sigma;
  cfg.seed = seed;
  return SyntheticBackend(make_synthetic_fixture(cfg));
}

RunConfig config(std::vector<std::size_t> stages, CdMode cd, SelectionMode mode = SelectionMode::Dynamic) {
  RunConfig cfg;
  cfg.plan = StagePlan::from_resolutions(stages, 14, 1.0, CDConfig{});
  cfg.selection.mode = mode;
  cfg.cd_mode = cd;
  return cfg;
}

// Every stage emits the same logits and a uniform attention row.
class ConstantBackend final : public Backend {
 public:
  explicit ConstantBackend(std::vector<double> logits) : logits_(std::move(logits)) {
    info_.push_back({"c0", true, std::nullopt});
  }
  BackendCapabilities capabilities() const override { return {logits_.size(), 0, ClsStyle::FullInterp}; }
  const std::vector<CaseInfo>& cases() const override { return info_; }
  StageOutput run_stage(std::size_t, std::size_t, const PatchGrid& grid, const PatchMask& mask) const override {
    std::vector<double> self(grid.patch_count());
    for (std::size_t i = 0; i < self.size(); ++i) self[i] = mask.kept(i) ? 1.0 + static_cast<double>(i % 5) : 0.0;
    return {AttentionMap(grid, self), CrossAttentionWeights::single_row(grid, std::vector<double>(grid.patch_count(), 1.0)),
            LogitVector{logits_}};
  }

 private:
  std::vector<double> logits_;
  std::vector<CaseInfo> info_;
};

}  // namespace

TEST_CASE("one-stage plan answers exactly like the backend") {
  const auto backend = small_fixture(30, 0.05);
  const RunConfig cfg = config({672}, CdMode::None);
  const auto grid = cfg.plan.stages[0];
  for (std::size_t ci = 0; ci < 30; ++ci) {
    const CaseResult r = run_case(backend, ci, cfg);
    const StageOutput out = backend.run_stage(ci, 0, grid, PatchMask::ones(grid));
    CHECK(r.answer_token == greedy_token(out.logits));
    CHECK(r.kept_fraction == std::vector<double>{1.0});
    CHECK(r.p_hal_cd == r.p_hal_expert);
  }
}

TEST_CASE("contrastive decoding is inert when every stage agrees") {
  const ConstantBackend backend({0.3, 1.2, -0.5});
  const CaseResult none = run_case(backend, 0, config({84, 168, 336, 672}, CdMode::None));
  const CaseResult multi = run_case(backend, 0, config({84, 168, 336, 672}, CdMode::Multi));
  const CaseResult single = run_case(backend, 0, config({84, 168, 336, 672}, CdMode::Single));
  CHECK(none.answer_token == 1);
  CHECK(multi.answer_token == 1);
  CHECK(single.answer_token == 1);
  CHECK(multi.p_hal_cd == doctest::Approx(none.p_hal_cd));
}

TEST_CASE("single-stage CD over two stages") {
  const auto backend = small_fixture(40, 0.05);
  const RunConfig cfg = config({336, 672}, CdMode::Single);
  for (std::size_t ci = 0; ci < 40; ++ci) {
    const CaseResult r = run_case(backend, ci, cfg);
    // Re-derive the two stages by hand.
    const auto& g1 = cfg.plan.stages[0];
    const auto& g2 = cfg.plan.stages[1];
    const StageOutput s1 = backend.run_stage(ci, 0, g1, PatchMask::ones(g1));
    AttentionAccumulator acc(g2);
    acc = accumulate(std::move(acc), fuse_attention(s1.self_attn, s1.cross));
    const PatchMask m2 = advance_stage(acc, g2, cfg.selection);
    const StageOutput s2 = backend.run_stage(ci, 1, g2, m2);
    const LogitVector single = single_stage_cd(s2.logits, s1.logits, cfg.plan.cd.alpha);
    CDConfig flat = cfg.plan.cd;
    flat.beta = 0.0;
    flat.gamma = 0.0;
    StageLogits st;
    st.amateur3 = s1.logits;
    st.amateur2 = s1.logits;
    st.expert = s2.logits;
    CHECK(multi_stage_cd(st, flat).values == single.values);
    CHECK(r.answer_token == greedy_token(single));
    CHECK(r.kept_fraction[1] == doctest::Approx(m2.kept_fraction()));
  }
}

TEST_CASE("noiseless dice never drops across stages") {
  const auto backend = small_fixture(60, 0.0, 11);
  const DatasetResult res = run_dataset_serial(backend, config({84, 168, 336, 672}, CdMode::Multi));
  std::size_t positives = 0;
  for (const auto& r : res.cases) {
    if (!r.gold_yes) {
      for (const auto& d : r.dice) CHECK_FALSE(d.has_value());
      continue;
    }
    ++positives;
    for (std::size_t s = 1; s < r.dice.size(); ++s) {
      REQUIRE(r.dice[s].has_value());
      CHECK(*r.dice[s] >= *r.dice[s - 1] - 1e-12);
    }
  }
  CHECK(positives > 10);
}

TEST_CASE("parallel and serial runs agree; order does not change the report") {
  const auto backend = small_fixture(48, 0.05, 3);
  const RunConfig cfg = config({84, 168, 336, 672}, CdMode::Multi);
  const DatasetResult par = run_dataset(backend, cfg);
  const DatasetResult ser = run_dataset_serial(backend, cfg);
  CHECK(par.report == ser.report);
  CHECK(format_csv(par.cases) == format_csv(ser.cases));

  std::vector<std::size_t> order(48);
  for (std::size_t i = 0; i < 48; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), std::mt19937_64(99));
  const DatasetResult shuffled = run_dataset(backend, cfg, order);
  CHECK(shuffled.report == ser.report);
  for (std::size_t i = 0; i < 48; ++i) CHECK(shuffled.cases[i].case_id == ser.cases[order[i]].case_id);
}

TEST_CASE("dataset errors") {
  const auto backend = small_fixture(4, 0.05);
  CHECK(code_of([&] { run_dataset(backend, config({336, 672}, CdMode::Multi)); }) == Errc::ConfigError);
  CHECK(code_of([&] { run_dataset(backend, config({672}, CdMode::Single)); }) == Errc::ConfigError);
  const SyntheticBackend empty({});
  CHECK(code_of([&] { run_dataset(empty, config({336, 672}, CdMode::None)); }) == Errc::EmptyDataset);
  const std::vector<std::size_t> bad{0, 9};
  CHECK(code_of([&] { run_dataset(backend, config({336, 672}, CdMode::None), bad); }) == Errc::MissingCase);
}

TEST_CASE("csv layout") {
  CHECK(format_csv({}) ==
        "case_id,gold,answer,correct,p_hal_expert,p_hal_cd,dice_s1,dice_s2,dice_s3,dice_s4,frac_s2,frac_s3,frac_s4\n");
  CaseResult r;
  r.case_id = "x";
  r.gold_yes = true;
  r.answer_yes = false;
  r.p_hal_expert = 0.25;
  r.p_hal_cd = 0.125;
  r.dice = {0.5, std::nullopt};
  r.kept_fraction = {1.0, 0.375};
  const std::vector<CaseResult> rows{r};
  const std::string csv = format_csv(rows);
  CHECK(csv.substr(csv.find('\n') + 1) == "x,yes,no,0,0.25,0.125,0.5,,,,0.375,,\n");

  r.dice.resize(5);
  r.kept_fraction.resize(5);
  const std::vector<CaseResult> wide{r};
  CHECK(format_csv(wide).starts_with(
      "case_id,gold,answer,correct,p_hal_expert,p_hal_cd,dice_s1,dice_s2,dice_s3,dice_s4,dice_s5,frac_s2,frac_s3,frac_s4,frac_s5\n"));
}

TEST_CASE("heatmap pixels and pgm bytes") {
  const auto grid = PatchGrid::square(28, 14);
  CHECK(heatmap_pixels(AttentionMap(grid, {0.0, 0.5, 0.5, 1.0})) == std::vector<std::uint8_t>{0, 128, 128, 255});
  CHECK(heatmap_pixels(AttentionMap(grid, {0.2, 0.2, 0.2, 0.2})) == std::vector<std::uint8_t>{255, 255, 255, 255});
  CHECK(heatmap_pixels(AttentionMap::zeros(grid)) == std::vector<std::uint8_t>{0, 0, 0, 0});

  const auto path = std::filesystem::temp_directory_path() / "second_heatmap_test.pgm";
  emit_heatmap_pgm(AttentionMap(PatchGrid::make(14, 42, 14), {0.0, 1.0, 2.0}), path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(bytes == std::string("P5\n3 1\n255\n\x00\x80\xff", 14));
  std::filesystem::remove(path);
}

TEST_CASE("run spec parsing") {
  SUBCASE("defaults") {
    const RunSpec spec = parse_run_spec(nlohmann::json::object());
    CHECK(spec.stages == std::vector<std::size_t>{84, 168, 336, 672});
    CHECK(spec.cd_mode == CdMode::Multi);
    CHECK(spec.synthetic.noise_sigma == 0.016);
    const RunConfig cfg = spec.run_config();
    CHECK(cfg.plan.stage_count() == 4);
  }
  SUBCASE("explicit fields") {
    const RunSpec spec = parse_run_spec(nlohmann::json::parse(R"({
      "base_resolution": 168, "stage_count": 3, "lambda": 2.5, "selection": "fixed:0.25",
      "cd_mode": "single", "cd": {"alpha": 0.5}, "seed": 9, "synthetic": {"cases": 10, "noise_sigma": 0.1}})"));
    CHECK(spec.stages == std::vector<std::size_t>{84, 168, 336});
    CHECK(spec.lambda == 2.5);
    CHECK(spec.selection == SelectionMode::Fixed);
    CHECK(spec.fixed_fraction == 0.25);
    CHECK(spec.cd.alpha == 0.5);
    CHECK(spec.cd.beta == 0.7);
    CHECK(spec.synthetic.seed == 9);
    CHECK(spec.synthetic.case_count == 10);
    const RunSpec again = parse_run_spec(to_json(spec));
    CHECK(again.stages == spec.stages);
    CHECK(selection_name(again.selection, again.fixed_fraction) == "fixed:0.25");
    CHECK(cd_mode_name(again.cd_mode) == "single");
  }
  SUBCASE("rejections") {
    auto bad = [](const char* text) {
      return code_of([&] { parse_run_spec(nlohmann::json::parse(text)).run_config(); });
    };
    CHECK(bad(R"({"stages": [84, 170]})") == Errc::ConfigError);
    CHECK(bad(R"({"stages": [85, 170]})") == Errc::ConfigError);
    CHECK(bad(R"({"selection": "greedy"})") == Errc::ConfigError);
    CHECK(bad(R"({"selection": "fixed:1.5"})") == Errc::ConfigError);
    CHECK(bad(R"({"lambda": -1})") == Errc::ConfigError);
    CHECK(bad(R"({"cd": {"alpha": -0.1}})") == Errc::ConfigError);
    CHECK(bad(R"({"stages": "84"})") == Errc::ConfigError);
    CHECK(bad(R"([1, 2])") == Errc::ConfigError);
  }
  SUBCASE("flag parsers") {
    CHECK(parse_stage_list("42,84, 168") == std::vector<std::size_t>{42, 84, 168});
    CHECK(code_of([] { parse_stage_list(""); }) == Errc::ConfigError);
    CHECK(code_of([] { parse_stage_list("84,x"); }) == Errc::ConfigError);
    CHECK(code_of([] { parse_cd_mode("both"); }) == Errc::ConfigError);
  }
}
