#include "second/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>

#include "second/contrastive.hpp"
#include "second/error.hpp"

namespace second {

namespace {

double p_hal_of_greedy(const LogitVector& logits) {
  const std::size_t token = greedy_token(logits);
  const LogitVector steps[] = {logits};
  const std::size_t chosen[] = {token};
  return hallucination_probability(sequence_probability(steps, chosen));
}

// The accumulator divided by the plan's stage count. Each stage adds unit mass
// with no patch above 1, so values stay in [0, 1], and since the scale is the
// same at every stage, stage s+1 is exactly stage s plus that stage's increment.
AttentionMap dice_view(const AttentionAccumulator& acc, std::size_t stages) {
  AttentionMap view = acc.as_map();
  const double scale = 1.0 / static_cast<double>(stages);
  for (double& v : view.values) v = std::min(1.0, v * scale);
  return view;
}

std::vector<std::size_t> resolve_indices(const Backend& backend, std::span<const std::size_t> case_indices) {
  std::vector<std::size_t> order(case_indices.begin(), case_indices.end());
  if (order.empty()) {
    order.resize(backend.cases().size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  if (order.empty()) throw Error(Errc::EmptyDataset, "backend has no cases");
  for (std::size_t ci : order) {
    if (ci >= backend.cases().size()) throw Error(Errc::MissingCase, "no case #" + std::to_string(ci));
  }
  return order;
}

ClassificationReport score(const std::vector<CaseResult>& results) {
  std::vector<YesNoAnswer> answers;
  answers.reserve(results.size());
  for (const auto& r : results) answers.push_back({r.answer_yes, r.gold_yes});
  return classification_scores(answers);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  try {
    selection.validate();
    plan.cd.validate();
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  if (plan.stages.empty()) throw Error(Errc::ConfigError, "plan has no stages");
  if (cd_mode == CdMode::Single && plan.stage_count() < 2) {
    throw Error(Errc::ConfigError, "single-stage CD needs at least 2 stages");
  }
  if (cd_mode == CdMode::Multi && plan.stage_count() < 3) {
    throw Error(Errc::ConfigError, "multi-stage CD needs at least 3 stages");
  }
}

CaseResult run_case(const Backend& backend, std::size_t case_index, const RunConfig& cfg) {
  const auto& info = backend.cases().at(case_index);
  const StagePlan& plan = cfg.plan;
  const std::size_t stages = plan.stage_count();

  CaseResult result;
  result.case_id = info.id;
  result.gold_yes = info.gold_yes;
  result.dice.resize(stages);
  result.kept_fraction.resize(stages, 0.0);

  std::vector<PatchMask> masks = init_masks(plan);
  AttentionAccumulator acc(plan.finest());
  std::vector<LogitVector> logits;
  logits.reserve(stages);

  for (std::size_t s = 0; s < stages; ++s) {
    const PatchGrid& grid = plan.stages[s];
    result.kept_fraction[s] = masks[s].kept_fraction();
    StageOutput out;
    try {
      out = backend.run_stage(case_index, s, grid, masks[s]);
    } catch (const Error& e) {
      throw Error(e.code(), "case " + info.id + ", stage " + std::to_string(s + 1) + ": " + e.what());
    }
    logits.push_back(std::move(out.logits));

    const AttentionMap visual = fuse_attention(out.self_attn, out.cross);
    // A stage that attends to nothing adds no evidence.
    if (visual.mass() > 0.0) acc = accumulate(std::move(acc), visual);
    if (info.gt) result.dice[s] = attention_dice(dice_view(acc, stages), *info.gt);

    if (s + 1 == stages) break;
    const PatchGrid& next = plan.stages[s + 1];
    PatchMask next_mask = acc.empty() ? PatchMask::ones(next) : advance_stage(acc, next, cfg.selection);
    if (cfg.cumulative_union) next_mask = next_mask.union_with(upsample_mask(masks[s], grid, next));
    masks[s + 1] = std::move(next_mask);
  }

  const LogitVector& expert = logits.back();
  LogitVector decided = expert;
  if (cfg.cd_mode == CdMode::Single && stages >= 2) {
    decided = single_stage_cd(expert, logits.front(), plan.cd.alpha);
  } else if (cfg.cd_mode == CdMode::Multi && stages >= 3) {
    decided = multi_stage_cd(StageLogits::from_stages(logits), plan.cd);
  }
  result.answer_token = greedy_token(decided);
  result.answer_yes = result.answer_token == backend.capabilities().yes_token;
  result.p_hal_expert = p_hal_of_greedy(expert);
  result.p_hal_cd = p_hal_of_greedy(decided);
  if (cfg.keep_attention) result.attention = acc.as_map();
  return result;
}

DatasetResult run_dataset(const Backend& backend, const RunConfig& cfg, std::span<const std::size_t> case_indices) {
  cfg.validate();
  const std::vector<std::size_t> order = resolve_indices(backend, case_indices);
  std::vector<CaseResult> results(order.size());
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(order.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = run_case(backend, order[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
#pragma omp critical(second_run_dataset_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  DatasetResult out;
  out.report = score(results);
  out.cases = std::move(results);
  return out;
}

DatasetResult run_dataset_serial(const Backend& backend, const RunConfig& cfg,
                                 std::span<const std::size_t> case_indices) {
  cfg.validate();
  const std::vector<std::size_t> order = resolve_indices(backend, case_indices);
  DatasetResult out;
  out.cases.reserve(order.size());
  for (std::size_t ci : order) out.cases.push_back(run_case(backend, ci, cfg));
  out.report = score(out.cases);
  return out;
}

std::string format_csv(std::span<const CaseResult> results) {
  std::size_t columns = 4;
  for (const auto& r : results) columns = std::max(columns, r.dice.size());

  std::string csv = "case_id,gold,answer,correct,p_hal_expert,p_hal_cd";
  for (std::size_t s = 1; s <= columns; ++s) csv += ",dice_s" + std::to_string(s);
  for (std::size_t s = 2; s <= columns; ++s) csv += ",frac_s" + std::to_string(s);
  csv += '\n';
  for (const auto& r : results) {
    csv += r.case_id;
    csv += r.gold_yes ? ",yes" : ",no";
    csv += r.answer_yes ? ",yes" : ",no";
    csv += r.correct() ? ",1" : ",0";
    csv += ',' + fmt(r.p_hal_expert) + ',' + fmt(r.p_hal_cd);
    for (std::size_t s = 0; s < columns; ++s) {
      csv += ',';
      if (s < r.dice.size() && r.dice[s]) csv += fmt(*r.dice[s]);
    }
    for (std::size_t s = 1; s < columns; ++s) {
      csv += ',';
      if (s < r.kept_fraction.size()) csv += fmt(r.kept_fraction[s]);
    }
    csv += '\n';
  }
  return csv;
}

void emit_csv(std::span<const CaseResult> results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string());
  const std::string csv = format_csv(results);
  out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

std::vector<std::uint8_t> heatmap_pixels(const AttentionMap& attn) {
  const double peak = attn.values.empty() ? 0.0 : *std::max_element(attn.values.begin(), attn.values.end());
  std::vector<std::uint8_t> px(attn.values.size(), 0);
  if (!(peak > 0.0)) return px;
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double level = std::floor(attn.values[i] / peak * 255.0 + 0.5);
    px[i] = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
  }
  return px;
}

void emit_heatmap_pgm(const AttentionMap& attn, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string());
  out << "P5\n" << attn.grid.cols() << ' ' << attn.grid.rows() << "\n255\n";
  const std::vector<std::uint8_t> px = heatmap_pixels(attn);
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

}  // namespace second
