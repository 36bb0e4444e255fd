#include "tfmseg/errors.hpp"

namespace tfmseg {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_argument: return "bad-argument";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::unsupported_missing: return "unsupported-missing";
        case ErrorCode::degenerate_segment: return "degenerate-segment";
        case ErrorCode::segment_too_short: return "segment-too-short";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::parse_error: return "parse-error";
        case ErrorCode::config_error: return "config-error";
    }
    return "unknown";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_argument: return 10;
        case ErrorCode::dimension_mismatch: return 11;
        case ErrorCode::unsupported_missing: return 12;
        case ErrorCode::degenerate_segment: return 13;
        case ErrorCode::segment_too_short: return 14;
        case ErrorCode::io_error: return 15;
        case ErrorCode::parse_error: return 16;
        case ErrorCode::config_error: return 17;
    }
    return 1;
}

}  // namespace tfmseg
