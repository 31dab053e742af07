#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace courseassist {

enum class ErrorCode {
    validation,
    not_found,
    unauthorized,
    invalid_config,
    provider_unreachable,
    provider_rejected,
    dimension_mismatch,
    deadline_exceeded,
    unparseable_verdict,
    zero_vector,
    budget_too_small,
    inconsistent_spec,
    malformed_input,
    io,
    storage,
};

std::string_view to_string(ErrorCode code);

/// Single exception type used across the library. The code is stable and is
/// what the HTTP layer and the CLI map to status codes / exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string request_id = {})
        : std::runtime_error(message), code_(code), request_id_(std::move(request_id)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& request_id() const noexcept { return request_id_; }

    bool retryable() const noexcept { return code_ == ErrorCode::provider_unreachable; }

private:
    ErrorCode code_;
    std::string request_id_;
};

using Timestamp = std::chrono::sys_seconds;

/// ISO-8601 UTC with second precision, e.g. "2024-02-05T19:04:00Z".
std::string format_timestamp(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM:SSZ" and "YYYY-MM-DD" (midnight UTC).
Timestamp parse_timestamp(std::string_view text);
std::optional<Timestamp> try_parse_timestamp(std::string_view text);

Timestamp now_utc();

namespace utf8 {

/// Number of code points; assumes well-formed input (see is_valid).
std::size_t length(std::string_view s) noexcept;
bool is_valid(std::string_view s) noexcept;
/// Byte offset of the code point at index `cp`; clamps to s.size().
std::size_t byte_offset(std::string_view s, std::size_t cp) noexcept;

} // namespace utf8

std::string_view trim(std::string_view s) noexcept;

/// Warnings go to stderr unless a sink is installed (tests install a capturing one).
using LogSink = void (*)(std::string_view message);
void set_log_sink(LogSink sink) noexcept;
void log_warning(std::string_view message);
std::string to_lower(std::string_view s);

} // namespace courseassist
