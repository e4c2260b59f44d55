#include "sketchparse/error.hpp"

namespace sketchparse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyForm: return "EmptyForm";
    case ErrorCode::UnbalancedParens: return "UnbalancedParens";
    case ErrorCode::MissingSurface: return "MissingSurface";
    case ErrorCode::OverlappingSpans: return "OverlappingSpans";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::MalformedBlock: return "MalformedBlock";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyCandidate: return "EmptyCandidate";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& detail,
                           std::optional<std::size_t> index) {
  std::string msg(to_string(code));
  if (index) msg += "(" + std::to_string(*index) + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string detail, std::optional<std::size_t> index)
    : std::runtime_error(format_message(code, detail, index)), code_(code), index_(index) {}

bool Error::is_data_error() const noexcept {
  switch (code_) {
    case ErrorCode::ArityMismatch:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::BadRatios:
      return false;
    default:
      return true;
  }
}

}  // namespace sketchparse
