#pragma once

#include "courseassist/course_config.hpp"
#include "courseassist/knowledge_store.hpp"

#include <optional>
#include <string>
#include <vector>

namespace courseassist {

inline constexpr std::string_view kDisclaimer = "The responses may contain incorrect information";

enum class SegmentKind { text, code, diagram_placeholder };

std::string_view to_string(SegmentKind kind);

struct Segment {
    SegmentKind kind = SegmentKind::text;
    std::string content;
    /// Info string of the opening fence (code and diagram segments).
    std::string language;
    // Exact fence lines, kept so segments reproduce the raw text.
    std::string fence_open;
    std::string fence_close;

    bool operator==(const Segment&) const = default;
};

struct Reference {
    std::string document_id;
    std::string title;
    std::string chunk_id;
    std::string link;

    bool operator==(const Reference&) const = default;
};

struct StructuredResponse {
    std::vector<Segment> segments;
    std::vector<Reference> references;
    std::optional<std::string> follow_up_question;
    std::string disclaimer{kDisclaimer};
};

/// Splits model output on fenced blocks. Lines are the unit: a line starting
/// with ``` opens a block, a line that is ``` plus optional whitespace closes
/// it. Unclosed or empty blocks stay text. Never fails.
std::vector<Segment> segment(std::string_view raw);

/// Inverse of segment(): rebuilds the raw text from segments.
std::string reassemble(const std::vector<Segment>& segments);

/// Fenced block languages rendered as diagram placeholders.
bool is_diagram_language(std::string_view language);

std::string document_link(const std::string& course_id, const std::string& document_id);

/// One reference per distinct document, in rank order. Chunks missing from
/// the store are skipped with a warning.
std::vector<Reference> attach_references(const std::vector<RetrievalResult>& results,
                                         const KnowledgeStore& store);

/// When the policy allows it and the last non-empty line ends with '?',
/// returns the final question sentence of that line.
std::optional<std::string> extract_follow_up(std::string_view raw, FollowUpPolicy policy);

StructuredResponse process_response(std::string_view raw, const std::vector<RetrievalResult>& results,
                                    const KnowledgeStore& store, FollowUpPolicy policy);

} // namespace courseassist
