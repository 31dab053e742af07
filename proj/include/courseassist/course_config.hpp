#pragma once

#include "courseassist/common.hpp"
#include "courseassist/dispatcher.hpp"
#include "courseassist/mode.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace courseassist {

enum class FollowUpPolicy { never, model_decides, always };

std::string_view to_string(FollowUpPolicy policy);
FollowUpPolicy parse_follow_up_policy(std::string_view text);

/// Instruction text that is active only inside [active_from, active_to).
struct TimeGuidance {
    Timestamp active_from{};
    Timestamp active_to{};
    std::string text;

    bool operator==(const TimeGuidance&) const = default;
};

inline constexpr std::size_t kDefaultHistoryRounds = 6;
inline constexpr std::size_t kDefaultPromptBudget = 24000;

/// Educator-owned settings for one course. Serialized as one JSON file per
/// course; every field except course_id has a default.
struct CourseConfig {
    std::string course_id;
    std::string name;
    std::string description;
    std::string audience_note;
    std::vector<std::string> educator_rules;
    std::vector<TimeGuidance> time_guidance;
    std::map<ConversationMode, std::string> mode_instructions = default_mode_instructions();
    FollowUpPolicy follow_up_policy = FollowUpPolicy::model_decides;
    HomeworkThresholds thresholds;
    std::size_t history_max_rounds = kDefaultHistoryRounds;
    std::size_t prompt_char_budget = kDefaultPromptBudget;
    std::size_t top_k = 2;
    std::size_t max_output_chars = 8000;

    static std::map<ConversationMode, std::string> default_mode_instructions();

    /// Throws invalid_config describing the first violated invariant.
    void validate() const;

    bool operator==(const CourseConfig&) const = default;
};

std::string course_config_to_json(const CourseConfig& config);
/// Strict: unknown keys and wrong types are invalid_config. Result is validated.
CourseConfig course_config_from_json(std::string_view text);
CourseConfig load_course_config(const std::filesystem::path& path);

} // namespace courseassist
