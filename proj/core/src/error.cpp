#include "qfsum/error.hpp"

namespace qfsum {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kExtractionFailed: return "ExtractionFailed";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kExhausted: return "Exhausted";
    case ErrorCode::kUnknownSentence: return "UnknownSentence";
    case ErrorCode::kDuplicateInBatch: return "DuplicateInBatch";
    case ErrorCode::kNothingShown: return "NothingShown";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kWrongItemCount: return "WrongItemCount";
    case ErrorCode::kResponseOutOfRange: return "ResponseOutOfRange";
    case ErrorCode::kNoRelevantGold: return "NoRelevantGold";
    case ErrorCode::kMalformedInput: return "MalformedInput";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kNotProcessed: return "NotProcessed";
    case ErrorCode::kTooManyDocuments: return "TooManyDocuments";
    case ErrorCode::kSessionNotFound: return "SessionNotFound";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace qfsum
