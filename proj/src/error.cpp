#include "second/error.hpp"

namespace second {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonDivisibleResolution: return "NonDivisibleResolution";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::EmptyCrossAttention: return "EmptyCrossAttention";
    case Errc::ZeroMassAttention: return "ZeroMassAttention";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::SinglePatchGrid: return "SinglePatchGrid";
    case Errc::OutOfRangeEntropy: return "OutOfRangeEntropy";
    case Errc::NonPositiveLambda: return "NonPositiveLambda";
    case Errc::EmptyAccumulator: return "EmptyAccumulator";
    case Errc::VocabMismatch: return "VocabMismatch";
    case Errc::MissingStage: return "MissingStage";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::HypothesisViolated: return "HypothesisViolated";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::ShapeOverflow: return "ShapeOverflow";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::MissingCase: return "MissingCase";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::IoError: return "IoError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace second
