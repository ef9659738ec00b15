#include "second/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "second/error.hpp"

namespace second {

namespace {

void require_vocab(const LogitVector& v) {
  if (v.vocab_size() < 2) throw Error(Errc::InvalidArgument, "vocabulary must have at least 2 entries");
}

void require_same_vocab(const LogitVector& a, const LogitVector& b) {
  if (a.vocab_size() != b.vocab_size()) {
    throw Error(Errc::VocabMismatch,
                std::to_string(a.vocab_size()) + " vs " + std::to_string(b.vocab_size()) + " entries");
  }
}

// out += weight * (hi - lo), skipped for weight 0 so a disabled term cannot
// perturb the result (0 * x may be -0.0 and -0.0 + 0.0 flips the sign bit).
void add_contrast(std::vector<double>& out, double weight, const LogitVector& hi, const LogitVector& lo) {
  if (weight == 0.0) return;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] + weight * (hi.values[i] - lo.values[i]);
}

}  // namespace

void CDConfig::validate() const {
  for (double w : {alpha, beta, gamma}) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(Errc::OutOfRange, "CD weights must lie in [0, 1]");
  }
}

StageLogits StageLogits::from_stages(std::span<const LogitVector> per_stage) {
  if (per_stage.size() < 2) throw Error(Errc::MissingStage, "contrastive decoding needs at least two stages");
  StageLogits out;
  const std::size_t n = per_stage.size();
  out.expert = per_stage[n - 1];
  out.amateur3 = per_stage[n - 2];
  if (n >= 3) out.amateur2 = per_stage[n - 3];
  if (n >= 4) out.amateur1 = per_stage[n - 4];
  return out;
}

LogitVector single_stage_cd(const LogitVector& expert, const LogitVector& amateur, double alpha) {
  require_vocab(expert);
  require_same_vocab(expert, amateur);
  std::vector<double> out = expert.values;
  add_contrast(out, alpha, expert, amateur);
  return LogitVector(std::move(out));
}

LogitVector multi_stage_cd(const StageLogits& stages, const CDConfig& cfg) {
  if (!stages.amateur3 || !stages.amateur2) {
    throw Error(Errc::MissingStage, "multi-stage CD needs at least amateur2, amateur3 and expert");
  }
  if (stages.amateur1) require_same_vocab(stages.expert, *stages.amateur1);
  require_same_vocab(stages.expert, *stages.amateur2);

  LogitVector out = single_stage_cd(stages.expert, *stages.amateur3, cfg.alpha);
  add_contrast(out.values, cfg.beta, *stages.amateur3, *stages.amateur2);
  if (stages.amateur1) add_contrast(out.values, cfg.gamma, *stages.amateur2, *stages.amateur1);
  return out;
}

std::size_t greedy_token(const LogitVector& logits) {
  require_vocab(logits);
  return static_cast<std::size_t>(std::max_element(logits.values.begin(), logits.values.end()) -
                                  logits.values.begin());
}

std::vector<double> log_softmax(const LogitVector& logits) {
  require_vocab(logits);
  const double peak = *std::max_element(logits.values.begin(), logits.values.end());
  double sum = 0.0;
  for (double x : logits.values) sum += std::exp(x - peak);
  const double log_norm = peak + std::log(sum);
  std::vector<double> out(logits.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits.values[i] - log_norm;
  return out;
}

double sequence_log_probability(std::span<const LogitVector> step_logits, std::span<const std::size_t> chosen) {
  if (step_logits.size() != chosen.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(step_logits.size()) + " steps but " +
                                          std::to_string(chosen.size()) + " chosen tokens");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < chosen.size(); ++t) {
    if (chosen[t] >= step_logits[t].vocab_size()) {
      throw Error(Errc::IndexOutOfRange, "token " + std::to_string(chosen[t]) + " at step " + std::to_string(t));
    }
    total += log_softmax(step_logits[t])[chosen[t]];
  }
  return total;
}

double sequence_probability(std::span<const LogitVector> step_logits, std::span<const std::size_t> chosen) {
  return std::exp(sequence_log_probability(step_logits, chosen));
}

}  // namespace second
