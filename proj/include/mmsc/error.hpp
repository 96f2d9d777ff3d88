#pragma once

#include <stdexcept>
#include <string>

namespace mmsc {

// Every failure the pipeline can report, shared across modules so callers
// can branch on the condition instead of parsing message text.
enum class ErrorCode {
    UnknownLabel,
    MalformedInput,
    NonMonotonic,
    NegativeSpan,
    DuplicateIndex,
    UnsupportedFormat,
    TruncatedFile,
    SpanOutOfRange,
    NoTimedWords,
    IncompatibleModality,
    BackendUnavailable,
    BackendRejected,
    CacheMiss,
    FailedTrajectories,
    LengthMismatch,
    InvalidConfig,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

} // namespace mmsc
