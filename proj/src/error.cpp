#include "imitlab/error.hpp"

namespace imitlab {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTimeoutRetryExhausted: return "TimeoutRetryExhausted";
    case ErrorCode::kInfeasibleSplit: return "InfeasibleSplit";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kEmptyLabeledSet: return "EmptyLabeledSet";
    case ErrorCode::kEmptyUnlabeledSet: return "EmptyUnlabeledSet";
    case ErrorCode::kEmptyCurve: return "EmptyCurve";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInconsistentK: return "InconsistentK";
    case ErrorCode::kSinkWriteFailure: return "SinkWriteFailure";
    case ErrorCode::kMissingModel: return "MissingModel";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kTagMismatch: return "TagMismatch";
  }
  return "Unknown";
}

}  // namespace imitlab
