#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchparse {

enum class ErrorCode {
  EmptyInput,
  EmptyForm,
  UnbalancedParens,
  MissingSurface,
  OverlappingSpans,
  UnknownEntity,
  ArityMismatch,
  ParseError,
  SpanOutOfRange,
  MalformedBlock,
  BadRatios,
  EmptyCorpus,
  EmptyClass,
  BadLabel,
  ShapeMismatch,
  EmptyCandidate,
  NoCandidates,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. `index()` carries the turn, line,
// block or label position when the error names one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail, std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

  // True for errors caused by malformed input data, as opposed to API misuse.
  bool is_data_error() const noexcept;

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace sketchparse
