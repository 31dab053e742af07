#include "courseassist/common.hpp"

#include <cctype>
#include <atomic>
#include <cstdio>
#include <iostream>

namespace courseassist {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::provider_unreachable: return "provider_unreachable";
    case ErrorCode::provider_rejected: return "provider_rejected";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::deadline_exceeded: return "deadline_exceeded";
    case ErrorCode::unparseable_verdict: return "unparseable_verdict";
    case ErrorCode::zero_vector: return "zero_vector";
    case ErrorCode::budget_too_small: return "budget_too_small";
    case ErrorCode::inconsistent_spec: return "inconsistent_spec";
    case ErrorCode::malformed_input: return "malformed_input";
    case ErrorCode::io: return "io";
    case ErrorCode::storage: return "storage";
    }
    return "unknown";
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

namespace {

bool parse_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

} // namespace

std::optional<Timestamp> try_parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!parse_digits(text, 0, 4, y) || text.size() < 10 || text[4] != '-' ||
        !parse_digits(text, 5, 2, mo) || text[7] != '-' || !parse_digits(text, 8, 2, d)) {
        return std::nullopt;
    }
    if (text.size() != 10) {
        if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
            text[19] != 'Z' || !parse_digits(text, 11, 2, h) || !parse_digits(text, 14, 2, mi) ||
            !parse_digits(text, 17, 2, sec)) {
            return std::nullopt;
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

Timestamp parse_timestamp(std::string_view text) {
    auto t = try_parse_timestamp(text);
    if (!t) throw Error(ErrorCode::malformed_input, "bad timestamp: " + std::string(text));
    return *t;
}

Timestamp now_utc() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

namespace utf8 {

namespace {
constexpr bool is_continuation(unsigned char c) noexcept { return (c & 0xC0) == 0x80; }
} // namespace

std::size_t length(std::string_view s) noexcept {
    std::size_t n = 0;
    for (unsigned char c : s) n += !is_continuation(c);
    return n;
}

bool is_valid(std::string_view s) noexcept {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if (!is_continuation(cc)) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong, surrogate, and out-of-range forms
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
            (extra == 3 && cp < 0x10000) || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

std::size_t byte_offset(std::string_view s, std::size_t cp) noexcept {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(s[i]))) {
            if (seen == cp) return i;
            ++seen;
        }
    }
    return s.size();
}

} // namespace utf8

std::string_view trim(std::string_view s) noexcept {
    const auto ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

namespace {
std::atomic<LogSink> g_log_sink{nullptr};
} // namespace

void set_log_sink(LogSink sink) noexcept { g_log_sink.store(sink); }

void log_warning(std::string_view message) {
    if (auto sink = g_log_sink.load()) {
        sink(message);
        return;
    }
    std::clog << "warning: " << message << '\n';
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace courseassist
