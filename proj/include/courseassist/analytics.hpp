#pragma once

#include "courseassist/conversation.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace courseassist {

struct ReportOptions {
    /// Local midnight of the first semester day (the date part is what counts).
    Timestamp semester_start{};
    /// Course timezone as minutes east of UTC; applied to weeks and hours.
    int tz_offset_minutes = 0;
    bool exclude_developers = true;
    /// Finite bucket edges in minutes; the last bucket is open-ended.
    std::vector<double> duration_edges_minutes{0, 5, 10, 20, 30, 60, 120};
};

/// Bucket i holds durations d with edges[i] <= d < edges[i+1] (the last
/// bucket has no upper edge).
struct DurationBuckets {
    std::vector<double> edges_minutes;
    std::vector<std::size_t> counts;
    std::vector<double> cumulative;
};

struct FollowUpStats {
    std::size_t conversations = 0;
    std::size_t emitted = 0;
    std::size_t answered = 0;
    double emitted_ratio = 0.0;
    /// Absent when nothing was emitted.
    std::optional<double> answered_ratio;
};

struct UsageStats {
    std::size_t conversations = 0;
    std::size_t users = 0;
    std::size_t questions = 0;
    double conversations_per_user = 0.0;

    DurationBuckets durations;
    std::size_t within_ten_minutes = 0;
    double within_ten_minutes_ratio = 0.0;

    std::map<std::size_t, std::size_t> rounds_histogram;
    std::size_t zero_rounds = 0;
    std::size_t single_round = 0;
    std::size_t within_three_rounds = 0;
    double no_question_ratio = 0.0;
    double single_round_ratio = 0.0;
    double within_three_rounds_ratio = 0.0;

    /// Semester week index -> conversations started (may be negative before the start).
    std::map<int, std::size_t> weekly;
    std::array<std::size_t, 24> hourly{};
    std::array<double, 24> hourly_cdf{};
    /// Same by question (user message) time.
    std::array<std::size_t, 24> hourly_questions{};
    std::array<double, 24> hourly_questions_cdf{};

    std::map<ConversationMode, std::size_t> mode_counts;
    std::map<ConversationMode, double> mode_shares;

    FollowUpStats follow_up;
};

struct UsageReport {
    bool empty = true;
    std::size_t excluded_developer_conversations = 0;
    UsageStats overall;
    std::map<std::string, UsageStats> per_course;
};

inline constexpr std::chrono::seconds kTenMinutes{600};

std::chrono::seconds conversation_duration(const Conversation& c);
/// floor(days since semester start / 7), both sides in course-local time.
int semester_week(Timestamp t, Timestamp semester_start, int tz_offset_minutes);
int local_hour(Timestamp t, int tz_offset_minutes);

bool emitted_follow_up(const Conversation& c);
/// A user message follows a flagged assistant message in the same conversation.
bool answered_follow_up(const Conversation& c);

UsageReport compute_report(const std::vector<Conversation>& conversations, const ReportOptions& options);

/// Per course, plus the key "all" for the union.
std::map<std::string, FollowUpStats> follow_up_report(const std::vector<Conversation>& conversations);

std::string report_to_json(const UsageReport& report, int indent = 2);
/// One plot-ready CSV per figure (durations, rounds, weekly, hourly, modes,
/// follow-up) with a `course` column; "all" rows hold the overall numbers.
/// Returns the written paths.
std::vector<std::filesystem::path> write_report_csvs(const UsageReport& report,
                                                     const std::filesystem::path& directory);

struct SampleResult {
    std::vector<std::string> ids;
    std::size_t eligible = 0;
    /// Fewer eligible conversations than requested.
    bool shortfall = false;
};

using ConversationPredicate = std::function<bool(const Conversation&)>;

/// Uniform sample without replacement, deterministic for a seed and
/// independent of input order (eligible ids are sorted before drawing).
SampleResult sample_for_annotation(const std::vector<Conversation>& conversations, std::size_t n,
                                   std::uint64_t seed, const ConversationPredicate& predicate = {});

} // namespace courseassist
