#include "mmsc/error.hpp"

namespace mmsc {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownLabel:         return "UnknownLabel";
        case ErrorCode::MalformedInput:       return "MalformedInput";
        case ErrorCode::NonMonotonic:         return "NonMonotonic";
        case ErrorCode::NegativeSpan:         return "NegativeSpan";
        case ErrorCode::DuplicateIndex:       return "DuplicateIndex";
        case ErrorCode::UnsupportedFormat:    return "UnsupportedFormat";
        case ErrorCode::TruncatedFile:        return "TruncatedFile";
        case ErrorCode::SpanOutOfRange:       return "SpanOutOfRange";
        case ErrorCode::NoTimedWords:         return "NoTimedWords";
        case ErrorCode::IncompatibleModality: return "IncompatibleModality";
        case ErrorCode::BackendUnavailable:   return "BackendUnavailable";
        case ErrorCode::BackendRejected:      return "BackendRejected";
        case ErrorCode::CacheMiss:            return "CacheMiss";
        case ErrorCode::FailedTrajectories:   return "FailedTrajectories";
        case ErrorCode::LengthMismatch:       return "LengthMismatch";
        case ErrorCode::InvalidConfig:        return "InvalidConfig";
        case ErrorCode::IoError:              return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace mmsc
