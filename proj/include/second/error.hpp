#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace second {

enum class Errc {
  InvalidArgument,
  NonDivisibleResolution,
  GridMismatch,
  EmptyGrid,
  EmptyCrossAttention,
  ZeroMassAttention,
  NotNormalized,
  SinglePatchGrid,
  OutOfRangeEntropy,
  NonPositiveLambda,
  EmptyAccumulator,
  VocabMismatch,
  MissingStage,
  LengthMismatch,
  IndexOutOfRange,
  DegenerateInput,
  OutOfRange,
  HypothesisViolated,
  EmptyDataset,
  BadMagic,
  VersionUnsupported,
  ShapeOverflow,
  TruncatedPayload,
  MissingCase,
  ShapeMismatch,
  IoError,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

// All library failures surface as this exception; the code is the contract,
// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace second
