#include "pmp/error.hpp"

namespace pmp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptData: return "CorruptData";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kDimensionOverflow: return "DimensionOverflow";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kEmptyPointSet: return "EmptyPointSet";
    case ErrorCode::kStageMismatch: return "StageMismatch";
    case ErrorCode::kNonPositiveLoss: return "NonPositiveLoss";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kSolverDiverged: return "SolverDiverged";
    case ErrorCode::kNoSeeds: return "NoSeeds";
    case ErrorCode::kEmptyBlob: return "EmptyBlob";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kPlacementFailure: return "PlacementFailure";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace pmp
