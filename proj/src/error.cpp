#include "emgds/error.hpp"

namespace emgds {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownActivityCode: return "UnknownActivityCode";
    case ErrorCode::RaggedChannels: return "RaggedChannels";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::InsufficientRepetitions: return "InsufficientRepetitions";
    case ErrorCode::SegmentTooShort: return "SegmentTooShort";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
  }
  return "Unknown";
}

}  // namespace emgds
