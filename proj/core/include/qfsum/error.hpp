#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qfsum {

// Closed set of failure conditions raised by the core library. The service
// layer maps each one to exactly one wire code and HTTP status.
enum class ErrorCode {
  kUnsupportedFormat,
  kExtractionFailed,
  kEmptyDocument,
  kEmptyCorpus,
  kProviderUnavailable,
  kDimensionMismatch,
  kSingleClass,
  kExhausted,
  kUnknownSentence,
  kDuplicateInBatch,
  kNothingShown,
  kSupportMismatch,
  kWrongItemCount,
  kResponseOutOfRange,
  kNoRelevantGold,
  kMalformedInput,
  kUnsupportedVersion,
  kInvariantViolation,
  kNotProcessed,
  kTooManyDocuments,
  kSessionNotFound,
  kInvalidArgument,
};

std::string_view ToString(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qfsum
