#pragma once

// Contrastive decoding over per-stage logits: the classic expert/amateur
// contrast and the telescoped multi-stage variant.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace second {

struct LogitVector {
  std::vector<double> values;

  LogitVector() = default;
  explicit LogitVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t vocab_size() const noexcept { return values.size(); }
};

// Contrast strengths, each in [0, 1]. Shipped defaults are the POPE-MSCOCO
// optimum for the 4-stage Vicuna setting.
struct CDConfig {
  double alpha = 0.7;
  double beta = 0.7;
  double gamma = 1.0;

  void validate() const;  // throws OutOfRange
};

// Logits for one decode step, coarsest stage first. Three-stage plans leave
// amateur1 empty; two-stage plans only fill amateur3 and expert.
struct StageLogits {
  std::optional<LogitVector> amateur1;
  std::optional<LogitVector> amateur2;
  std::optional<LogitVector> amateur3;
  LogitVector expert;

  // Maps the trailing (up to) four stages of a plan onto the CD roles.
  static StageLogits from_stages(std::span<const LogitVector> per_stage);
};

// expert + alpha * (expert - amateur)
LogitVector single_stage_cd(const LogitVector& expert, const LogitVector& amateur, double alpha);

// expert + alpha*(expert - am3) + beta*(am3 - am2) + gamma*(am2 - am1).
// Without amateur1 the gamma term is dropped. Evaluation order is fixed so
// that beta == gamma == 0 reproduces single_stage_cd bit for bit.
LogitVector multi_stage_cd(const StageLogits& stages, const CDConfig& cfg);

// Lowest index among the maxima.
std::size_t greedy_token(const LogitVector& logits);

// Natural-log softmax of one vector, computed stably.
std::vector<double> log_softmax(const LogitVector& logits);

// Product over steps of softmax(step)[chosen]; accumulated in log space.
double sequence_log_probability(std::span<const LogitVector> step_logits, std::span<const std::size_t> chosen);
double sequence_probability(std::span<const LogitVector> step_logits, std::span<const std::size_t> chosen);

}  // namespace second
