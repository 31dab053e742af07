#include "courseassist/common.hpp"

#include <doctest.h>

using namespace courseassist;

TEST_CASE("timestamps round-trip through ISO-8601") {
    const auto t = parse_timestamp("2024-02-05T19:04:07Z");
    CHECK(format_timestamp(t) == "2024-02-05T19:04:07Z");
    CHECK(format_timestamp(parse_timestamp("2024-02-29")) == "2024-02-29T00:00:00Z");
    CHECK(t.time_since_epoch().count() == 1707159847);
}

TEST_CASE("malformed timestamps are rejected") {
    CHECK_FALSE(try_parse_timestamp("yesterday"));
    CHECK_FALSE(try_parse_timestamp("2024-13-01"));
    CHECK_FALSE(try_parse_timestamp("2024-02-05T25:00:00Z"));
    CHECK_FALSE(try_parse_timestamp(""));
    CHECK_THROWS_AS(parse_timestamp("2024/02/05"), Error);
}

TEST_CASE("utf8 helpers count code points") {
    const std::string s = "a\xC3\xA9\xE2\x82\xAC\xF0\x9F\x98\x80";  // a, e-acute, euro, emoji
    CHECK(utf8::is_valid(s));
    CHECK(utf8::length(s) == 4);
    CHECK(utf8::byte_offset(s, 0) == 0);
    CHECK(utf8::byte_offset(s, 1) == 1);
    CHECK(utf8::byte_offset(s, 2) == 3);
    CHECK(utf8::byte_offset(s, 3) == 6);
    CHECK(utf8::byte_offset(s, 4) == s.size());
    CHECK(utf8::byte_offset(s, 99) == s.size());

    CHECK_FALSE(utf8::is_valid("\xC3"));
    CHECK_FALSE(utf8::is_valid("\xFF"));
    CHECK_FALSE(utf8::is_valid("\xE2\x82"));
    CHECK_FALSE(utf8::is_valid("\xC0\xAF"));  // overlong
    CHECK(utf8::is_valid(""));
}

TEST_CASE("trim and to_lower") {
    CHECK(trim("  x y \n") == "x y");
    CHECK(trim(" \t ").empty());
    CHECK(to_lower("YeS") == "yes");
}

TEST_CASE("only provider_unreachable is retryable") {
    CHECK(Error(ErrorCode::provider_unreachable, "x").retryable());
    CHECK_FALSE(Error(ErrorCode::provider_rejected, "x").retryable());
    CHECK(to_string(ErrorCode::budget_too_small) == "budget_too_small");
}
