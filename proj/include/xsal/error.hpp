#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xsal {

enum class ErrorCode {
    invalid_dimension,
    invalid_parameter,
    no_detections,
    no_match,
    capability_missing,
    adapter_error,
    protocol_error,
    incompatible_peer,
    connection_lost,
    out_of_range,
    io_error,
    format_error,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so callers
// (CLI, bridge server) can map it to an exit status or a wire error.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_dimension: return "invalid-dimension";
        case ErrorCode::invalid_parameter: return "invalid-parameter";
        case ErrorCode::no_detections: return "no-detections";
        case ErrorCode::no_match: return "no-match";
        case ErrorCode::capability_missing: return "capability-missing";
        case ErrorCode::adapter_error: return "adapter-error";
        case ErrorCode::protocol_error: return "protocol-error";
        case ErrorCode::incompatible_peer: return "incompatible-peer";
        case ErrorCode::connection_lost: return "connection-lost";
        case ErrorCode::out_of_range: return "out-of-range";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::format_error: return "format-error";
    }
    return "unknown";
}

}  // namespace xsal
