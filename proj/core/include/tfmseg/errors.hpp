#pragma once

#include <stdexcept>
#include <string>

namespace tfmseg {

// Machine-parsable error categories. The CLI prints them verbatim inside
// brackets on a single stderr line, so scripts can dispatch on the token.
enum class ErrorCode {
    bad_argument,
    dimension_mismatch,
    unsupported_missing,
    degenerate_segment,
    segment_too_short,
    io_error,
    parse_error,
    config_error,
};

const char* error_code_name(ErrorCode code);

// Stable process exit codes, one per category, used by the CLI so callers
// can dispatch without parsing stderr.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace tfmseg
