#include "courseassist/dispatcher.hpp"

#include <algorithm>
#include <vector>

namespace courseassist {

std::string_view to_string(ConversationMode mode) {
    switch (mode) {
    case ConversationMode::general: return "general";
    case ConversationMode::homework: return "homework";
    case ConversationMode::practice: return "practice";
    }
    return "general";
}

ConversationMode parse_mode(std::string_view text) {
    const auto t = to_lower(trim(text));
    if (t == "general") return ConversationMode::general;
    if (t == "homework") return ConversationMode::homework;
    if (t == "practice") return ConversationMode::practice;
    throw Error(ErrorCode::validation, "unknown conversation mode: " + std::string(text));
}

ConversationMode resolve_mode(std::span<const DocumentKind> selected_kinds,
                              std::optional<ConversationMode> explicit_mode) {
    if (explicit_mode) return *explicit_mode;
    const auto has = [&](DocumentKind k) {
        return std::find(selected_kinds.begin(), selected_kinds.end(), k) != selected_kinds.end();
    };
    if (has(DocumentKind::homework)) return ConversationMode::homework;
    if (has(DocumentKind::quiz) || has(DocumentKind::exam)) return ConversationMode::practice;
    return ConversationMode::general;
}

HomeworkVerdict classify_similarity(double max_similarity, std::optional<std::string> matched_chunk,
                                    const HomeworkThresholds& thresholds, const VerdictFn& ask) {
    HomeworkVerdict v;
    v.max_similarity = max_similarity;
    v.matched_chunk = std::move(matched_chunk);
    if (max_similarity >= thresholds.high) {
        v.is_homework = true;
    } else if (max_similarity >= thresholds.low) {
        v.llm_consulted = true;
        const auto answer = ask ? ask() : std::nullopt;
        v.llm_failed = !answer.has_value();
        v.llm_verdict = answer.value_or(false);
        v.is_homework = *v.llm_verdict;
    }
    return v;
}

KindFilter retrieval_filter_for(ConversationMode mode) {
    switch (mode) {
    case ConversationMode::homework: return std::set{DocumentKind::homework};
    case ConversationMode::practice: return std::set{DocumentKind::quiz, DocumentKind::exam};
    case ConversationMode::general: return std::nullopt;
    }
    return std::nullopt;
}

std::string Dispatcher::relevance_question(std::string_view homework_text, std::string_view question) {
    std::string q;
    q += "Is the student question below asking about, or for the solution to, the homework "
         "material below?\n\n";
    q += "Homework material:\n";
    q += homework_text;
    q += "\n\nStudent question:\n";
    q += question;
    return q;
}

HomeworkVerdict Dispatcher::detect_homework(const std::string& course_id, std::string_view question,
                                            const HomeworkThresholds& thresholds) const {
    const auto top = store_.retrieve(course_id, question, 1, std::set{DocumentKind::homework});
    if (top.empty()) return HomeworkVerdict{};

    const auto ask = [&]() -> std::optional<bool> {
        const auto chunk = store_.chunk(top.front().chunk_id);
        try {
            return gateway_.yes_no(relevance_question(chunk ? chunk->text : std::string{}, question));
        } catch (const Error& e) {
            log_warning("homework detection for course " + course_id +
                        " failed open: " + std::string(e.what()));
            return std::nullopt;
        }
    };
    return classify_similarity(top.front().score, top.front().chunk_id, thresholds, ask);
}

DispatchDecision Dispatcher::dispatch(const std::string& course_id, std::string_view question,
                                      std::span<const std::string> selected_documents,
                                      std::optional<ConversationMode> explicit_mode,
                                      const HomeworkThresholds& thresholds) const {
    std::vector<DocumentKind> kinds;
    for (const auto& id : selected_documents) {
        auto doc = store_.document(id);
        if (doc && doc->course_id == course_id) kinds.push_back(doc->kind);
    }

    DispatchDecision d;
    d.mode = resolve_mode(kinds, explicit_mode);
    try {
        d.homework = detect_homework(course_id, question, thresholds);
    } catch (const Error& e) {
        // retrieval/embedding trouble degrades to "not homework" rather than failing the turn
        log_warning("homework detection for course " + course_id + " skipped: " + e.what());
        d.homework = HomeworkVerdict{};
    }
    d.advisory = d.homework.is_homework && d.mode != ConversationMode::homework;
    d.retrieval_kind_filter = retrieval_filter_for(d.mode);
    return d;
}

} // namespace courseassist
