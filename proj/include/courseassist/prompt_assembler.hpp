#pragma once

#include "courseassist/conversation.hpp"
#include "courseassist/course_config.hpp"
#include "courseassist/dispatcher.hpp"
#include "courseassist/knowledge_store.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace courseassist {

/// Platform-level instructions placed first in every prompt.
extern const std::string kDeveloperInstructions;

/// Clauses the mode instruction is guaranteed to contain.
extern const std::string kHintOnlyClause;
extern const std::string kExerciseClause;
extern const std::string kAdvisoryClause;

struct HistoryTurn {
    MessageRole role = MessageRole::user;
    std::string text;

    bool operator==(const HistoryTurn&) const = default;
};

struct RetrievedContext {
    std::string title;
    std::string text;
};

struct PromptSections {
    std::string developer_instructions;
    std::string course_description;
    std::string educator_rules;
    std::string active_time_guidance;
    /// Highest rank first.
    std::vector<RetrievedContext> retrieved_contexts;
    /// Oldest first.
    std::vector<HistoryTurn> history;
    std::string mode_instruction;
    std::optional<std::string> follow_up_directive;
    std::string user_question;
};

/// Section names in the order they are rendered.
namespace section {
inline constexpr std::string_view developer_instructions = "developer_instructions";
inline constexpr std::string_view course_description = "course_description";
inline constexpr std::string_view educator_rules = "educator_rules";
inline constexpr std::string_view active_time_guidance = "active_time_guidance";
inline constexpr std::string_view mode_instruction = "mode_instruction";
inline constexpr std::string_view retrieved_contexts = "retrieved_contexts";
inline constexpr std::string_view history = "history";
inline constexpr std::string_view follow_up_directive = "follow_up_directive";
inline constexpr std::string_view user_question = "user_question";
} // namespace section

struct PromptText {
    std::string rendered;
    /// Present sections in render order; ranges are in code points.
    std::vector<std::pair<std::string, CharRange>> section_spans;
    std::size_t total_chars = 0;

    // What budget enforcement removed.
    std::size_t dropped_history_rounds = 0;
    std::size_t dropped_contexts = 0;
    std::vector<std::string> dropped_sections;

    std::optional<CharRange> span(std::string_view name) const;
};

/// The last `max_rounds` complete rounds, oldest first. Error turns and a
/// trailing unanswered question are not rounds.
std::vector<HistoryTurn> select_history(const Conversation& conversation, std::size_t max_rounds);

/// Guidance entries whose window contains `now`, in config order, joined by newlines.
std::string active_guidance(const CourseConfig& config, Timestamp now);

std::string mode_instruction_for(const DispatchDecision& decision, const CourseConfig& config);

std::optional<std::string> follow_up_directive_for(FollowUpPolicy policy);

std::string render_educator_rules(const std::vector<std::string>& rules);

/// Renders the sections in fixed order and enforces `budget` (code points).
///
/// Over budget, elements are removed one at a time in this order until the
/// prompt fits: history rounds (oldest first), retrieved contexts (lowest
/// rank first), then the follow-up directive, course description, time
/// guidance and educator rules. Developer instructions, the mode instruction
/// and the question are never removed; if they alone exceed the budget the
/// call fails with budget_too_small.
PromptText assemble(const PromptSections& sections, std::size_t budget);

} // namespace courseassist
