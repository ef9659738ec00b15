#pragma once

// End-to-end multi-stage decoding over a backend: stage loop, patch
// selection, contrastive decoding, metrics and report files.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "second/backend.hpp"
#include "second/metrics.hpp"
#include "second/scale_pyramid.hpp"
#include "second/selection.hpp"

namespace second {

enum class CdMode { None, Single, Multi };

struct RunConfig {
  StagePlan plan;
  SelectionConfig selection;
  CdMode cd_mode = CdMode::Multi;
  // OR each selected mask with the previous stage's mask (upsampled).
  bool cumulative_union = false;
  // Keep the final accumulated attention in CaseResult (for heatmaps).
  bool keep_attention = false;

  void validate() const;  // throws ConfigError
};

struct CaseResult {
  std::string case_id;
  bool gold_yes = false;
  bool answer_yes = false;
  std::size_t answer_token = 0;
  double p_hal_expert = 0.0;
  double p_hal_cd = 0.0;
  std::vector<std::optional<double>> dice;  // per stage; empty entries for negatives
  std::vector<double> kept_fraction;        // per stage
  std::optional<AttentionMap> attention;    // finest-grid accumulator when requested

  bool correct() const noexcept { return answer_yes == gold_yes; }
};

struct DatasetResult {
  ClassificationReport report;
  std::vector<CaseResult> cases;
};

CaseResult run_case(const Backend& backend, std::size_t case_index, const RunConfig& cfg);

// Runs the listed cases (all cases when `case_indices` is empty) across
// OpenMP threads. Results come back in input order.
DatasetResult run_dataset(const Backend& backend, const RunConfig& cfg, std::span<const std::size_t> case_indices = {});

// Single-threaded reference for run_dataset.
DatasetResult run_dataset_serial(const Backend& backend, const RunConfig& cfg,
                                 std::span<const std::size_t> case_indices = {});

// Columns: case_id, gold, answer, correct, p_hal_expert, p_hal_cd,
// dice_s1..dice_sK, frac_s2..frac_sK with K = max(4, stage count).
void emit_csv(std::span<const CaseResult> results, const std::filesystem::path& path);
std::string format_csv(std::span<const CaseResult> results);

// 8-bit binary PGM, one pixel per patch, scaled so the maximum maps to 255
// (round half up). An all-zero map renders black.
void emit_heatmap_pgm(const AttentionMap& attn, const std::filesystem::path& path);
std::vector<std::uint8_t> heatmap_pixels(const AttentionMap& attn);

}  // namespace second
