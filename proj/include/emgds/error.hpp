#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emgds {

enum class ErrorCode {
  MalformedHeader,
  MalformedRow,
  UnknownActivityCode,
  RaggedChannels,
  EmptyCorpus,
  InvalidConfig,
  WindowTooLong,
  InsufficientRepetitions,
  SegmentTooShort,
  DegenerateSegment,
  DimensionMismatch,
  TooFewSamples,
  InsufficientClasses,
  NonFiniteInput,
  MissingClass,
  LayoutMismatch,
  EmptyTestSet,
  IoError,
  VersionMismatch,
  SchemaError,
  SingularCovariance,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for every library failure; `code()` carries the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace emgds
