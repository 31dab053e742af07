#pragma once

#include "courseassist/knowledge_store.hpp"
#include "courseassist/llm_gateway.hpp"
#include "courseassist/mode.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>

namespace courseassist {

inline constexpr double kNoHomeworkSimilarity = -1.0;

struct HomeworkThresholds {
    double low = 0.60;
    double high = 0.90;

    bool operator==(const HomeworkThresholds&) const = default;
};

struct HomeworkVerdict {
    bool is_homework = false;
    /// -1 when the course has no homework chunks.
    double max_similarity = kNoHomeworkSimilarity;
    std::optional<std::string> matched_chunk;
    bool llm_consulted = false;
    /// Present iff llm_consulted. A failed consultation records `false`
    /// (fail-open) and sets llm_failed.
    std::optional<bool> llm_verdict;
    bool llm_failed = false;

    bool operator==(const HomeworkVerdict&) const = default;
};

struct DispatchDecision {
    ConversationMode mode = ConversationMode::general;
    HomeworkVerdict homework;
    /// Homework-looking question asked outside homework mode.
    bool advisory = false;
    KindFilter retrieval_kind_filter;

    bool operator==(const DispatchDecision&) const = default;
};

/// Explicit mode wins; otherwise homework > practice (quiz/exam) > general by
/// the kinds of the selected documents.
ConversationMode resolve_mode(std::span<const DocumentKind> selected_kinds,
                              std::optional<ConversationMode> explicit_mode);

/// Stage-two callback: returns the model's verdict, or nullopt when it
/// could not be obtained.
using VerdictFn = std::function<std::optional<bool>()>;

/// Threshold logic of homework detection, separated from retrieval so it can
/// be swept directly: >= high is homework, < low is not, anything in between
/// defers to `ask`. A missing verdict fails open (not homework).
HomeworkVerdict classify_similarity(double max_similarity, std::optional<std::string> matched_chunk,
                                    const HomeworkThresholds& thresholds, const VerdictFn& ask);

KindFilter retrieval_filter_for(ConversationMode mode);

class Dispatcher {
public:
    Dispatcher(const KnowledgeStore& store, LlmGateway& gateway) : store_(store), gateway_(gateway) {}

    HomeworkVerdict detect_homework(const std::string& course_id, std::string_view question,
                                    const HomeworkThresholds& thresholds = {}) const;

    DispatchDecision dispatch(const std::string& course_id, std::string_view question,
                              std::span<const std::string> selected_documents,
                              std::optional<ConversationMode> explicit_mode,
                              const HomeworkThresholds& thresholds = {}) const;

    /// Wording of the stage-two relevance question sent to the model.
    static std::string relevance_question(std::string_view homework_text, std::string_view question);

private:
    const KnowledgeStore& store_;
    LlmGateway& gateway_;
};

} // namespace courseassist
