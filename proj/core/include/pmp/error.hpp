#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pmp {

enum class ErrorCode {
  kInvalidArgument,
  kMissingFile,
  kUnsupportedFormat,
  kCorruptData,
  kParseError,
  kOutOfRange,
  kBadMagic,
  kVersionMismatch,
  kDimensionOverflow,
  kTruncatedPayload,
  kEmptyPointSet,
  kStageMismatch,
  kNonPositiveLoss,
  kDimensionMismatch,
  kImageTooSmall,
  kSolverDiverged,
  kNoSeeds,
  kEmptyBlob,
  kEmptyMatrix,
  kPlacementFailure,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as pmp::Error carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pmp
