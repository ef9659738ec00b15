#pragma once

// Sources of per-stage attention and logits. A backend answers one question:
// given a case, a stage grid and that stage's patch mask, what self-attention,
// cross-attention and answer logits does the model produce?

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "second/attention.hpp"
#include "second/contrastive.hpp"
#include "second/metrics.hpp"
#include "second/scale_pyramid.hpp"
#include "second/types.hpp"

namespace second {

struct StageOutput {
  AttentionMap self_attn;
  CrossAttentionWeights cross;
  LogitVector logits;
};

struct CaseInfo {
  std::string id;
  bool gold_yes = false;
  std::optional<GroundTruthMask> gt;  // absent for negatives
};

struct BackendCapabilities {
  std::size_t vocab_size = 2;
  std::size_t yes_token = 0;
  ClsStyle cls_style = ClsStyle::FullInterp;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendCapabilities capabilities() const = 0;
  virtual const std::vector<CaseInfo>& cases() const = 0;

  // Must be deterministic and callable concurrently. Patches dropped by
  // `mask` receive zero self-attention.
  virtual StageOutput run_stage(std::size_t case_index, std::size_t stage, const PatchGrid& grid,
                                const PatchMask& mask) const = 0;
};

// ---------------------------------------------------------------------------
// Synthetic planted-signal model

// logit margin toward the gold answer = a * overlap + b
struct SyntheticLogitModel {
  double a = 4.0;
  double b = -2.0;
};

struct SyntheticCase {
  std::string id;
  GroundTruthMask gt;  // all zeros for gold-no cases
  bool gold_yes = false;
  double noise_sigma = 0.0;
  double signal_gain = 1.0;
  std::uint64_t seed = 0;
};

// self_i  = max(0, g_i * gain + eps_i) * mask_i,  eps ~ N(0, sigma) drawn
//           from a stream keyed by (case seed, stage resolution)
// cross   = one row, uniform over kept patches
// logits  = {yes, no} with the gold answer ahead by a * overlap + b, where
//           overlap is the share of self-attention mass on the object
//           (gold yes) or off it (gold no).
StageOutput synthetic_run_stage(const SyntheticCase& c, std::size_t stage, const PatchGrid& grid,
                                const PatchMask& mask, const SyntheticLogitModel& model = {});

struct SyntheticFixtureConfig {
  std::size_t case_count = 200;
  std::uint64_t seed = 42;
  double noise_sigma = 0.016;
  double signal_gain = 1.0;
  std::size_t mask_resolution = 192;
  double yes_rate = 0.5;
  // Object area as a fraction of the image, drawn log-uniformly.
  double min_area_fraction = 0.002;
  double max_area_fraction = 0.2;
  SyntheticLogitModel logits;
};

// Elliptical objects at random positions; gold-no cases carry empty masks.
std::vector<SyntheticCase> make_synthetic_fixture(const SyntheticFixtureConfig& cfg);

class SyntheticBackend final : public Backend {
 public:
  SyntheticBackend(std::vector<SyntheticCase> cases, SyntheticLogitModel model = {});

  BackendCapabilities capabilities() const override { return {2, 0, ClsStyle::FullInterp}; }
  const std::vector<CaseInfo>& cases() const override { return info_; }
  StageOutput run_stage(std::size_t case_index, std::size_t stage, const PatchGrid& grid,
                        const PatchMask& mask) const override;

  const std::vector<SyntheticCase>& synthetic_cases() const noexcept { return cases_; }

 private:
  std::vector<SyntheticCase> cases_;
  std::vector<CaseInfo> info_;
  SyntheticLogitModel model_;
};

// ---------------------------------------------------------------------------
// On-disk tensor dumps
//
// <dir>/manifest.json:
//   {
//     "cls_style": "cls_preserved" | "full_interp",
//     "vocab": {"yes": 0, "no": 1},                      (optional)
//     "cases": [{
//       "id": "...", "gold": "yes" | "no",
//       "gt_mask_path": "gt.secd" | null,                (H x W, 0/1)
//       "stages": [{"resolution": 84, "self_attn": "...",
//                   "cross_attn": "...", "logits": "..."}]
//     }]
//   }
//
// self_attn is [rows, cols] or [n]; cross_attn is [T, n], [T, rows, cols] or
// [n]; logits is [V] or [T, V], of which the first step is the answer token.
// Paths are relative to <dir>.

struct DumpStage {
  std::size_t resolution = 0;
  std::filesystem::path self_attn, cross_attn, logits;
};

struct DumpCase {
  CaseInfo info;
  std::vector<DumpStage> stages;
};

struct TensorDump {
  std::filesystem::path root;
  ClsStyle cls_style = ClsStyle::FullInterp;
  std::size_t yes_token = 0;
  std::size_t vocab_size = 0;
  std::vector<DumpCase> cases;
};

// Parses and validates the manifest: every referenced file must exist and
// ground-truth masks are loaded eagerly.
TensorDump load_tensor_dump(const std::filesystem::path& dir);

StageOutput dump_run_stage(const TensorDump& dump, std::size_t case_index, const PatchGrid& grid,
                           const PatchMask& mask);

class DumpBackend final : public Backend {
 public:
  explicit DumpBackend(TensorDump dump);

  BackendCapabilities capabilities() const override { return {dump_.vocab_size, dump_.yes_token, dump_.cls_style}; }
  const std::vector<CaseInfo>& cases() const override { return info_; }
  StageOutput run_stage(std::size_t case_index, std::size_t stage, const PatchGrid& grid,
                        const PatchMask& mask) const override;

 private:
  TensorDump dump_;
  std::vector<CaseInfo> info_;
};

// Writes every case of `backend` at every plan stage (full masks) as a dump
// directory that load_tensor_dump accepts.
void export_tensor_dump(const Backend& backend, const StagePlan& plan, const std::filesystem::path& dir);

}  // namespace second
