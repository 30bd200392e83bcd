// errors.hpp — error taxonomy shared by the whole library.
//
// Library functions throw qtlc::Error with a stable ErrorCode; the CLI maps
// codes onto process exit codes. validate_layout is the one deliberate
// exception to throwing: it returns a violation report instead.

#pragma once

#include <stdexcept>
#include <string>

namespace qtlc {

enum class ErrorCode {
    invalid_input,        // non-finite values, empty spectra, ...
    invalid_rank,
    invalid_temperature,
    invalid_length,
    shape_mismatch,
    unknown_name,
    vocab_error,
    length_error,
    config_error,
    parse_error,
    reference_error,
    data_error,
    divergence_error,
    corrupt_block,
    checksum_error,
    format_version_error,
    io_error,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_input: return "invalid_input";
        case ErrorCode::invalid_rank: return "invalid_rank";
        case ErrorCode::invalid_temperature: return "invalid_temperature";
        case ErrorCode::invalid_length: return "invalid_length";
        case ErrorCode::shape_mismatch: return "shape_mismatch";
        case ErrorCode::unknown_name: return "unknown_name";
        case ErrorCode::vocab_error: return "vocab_error";
        case ErrorCode::length_error: return "length_error";
        case ErrorCode::config_error: return "config_error";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::reference_error: return "reference_error";
        case ErrorCode::data_error: return "data_error";
        case ErrorCode::divergence_error: return "divergence_error";
        case ErrorCode::corrupt_block: return "corrupt_block";
        case ErrorCode::checksum_error: return "checksum_error";
        case ErrorCode::format_version_error: return "format_version_error";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code),
          message_(message) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace qtlc
