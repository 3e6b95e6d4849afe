#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imitlab {

enum class ErrorCode {
  kInvalidArgument,
  kTimeoutRetryExhausted,
  kInfeasibleSplit,
  kEmptyTrainingSet,
  kEmptyDataset,
  kDimensionMismatch,
  kMissingClass,
  kEmptyPool,
  kEmptyLabeledSet,
  kEmptyUnlabeledSet,
  kEmptyCurve,
  kLengthMismatch,
  kEmptyCorpus,
  kInconsistentK,
  kSinkWriteFailure,
  kMissingModel,
  kParseError,
  kIoError,
  kTagMismatch,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status and tests can match on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace imitlab
