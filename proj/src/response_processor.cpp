#include "courseassist/response_processor.hpp"

#include <algorithm>
#include <set>

namespace courseassist {

std::string_view to_string(SegmentKind kind) {
    switch (kind) {
    case SegmentKind::text: return "text";
    case SegmentKind::code: return "code";
    case SegmentKind::diagram_placeholder: return "diagram_placeholder";
    }
    return "text";
}

bool is_diagram_language(std::string_view language) {
    const auto l = to_lower(trim(language));
    return l == "mermaid" || l == "plantuml" || l == "graphviz" || l == "dot" || l == "diagram";
}

namespace {

std::vector<std::string_view> split_lines(std::string_view raw) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (;;) {
        auto nl = raw.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(raw.substr(start));
            return lines;
        }
        lines.push_back(raw.substr(start, nl - start));
        start = nl + 1;
    }
}

bool opens_fence(std::string_view line) { return line.starts_with("```"); }

bool closes_fence(std::string_view line) {
    return line.starts_with("```") && trim(line.substr(3)).empty();
}

std::string join(const std::vector<std::string_view>& lines, std::size_t first, std::size_t last) {
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (i > first) out += '\n';
        out += lines[i];
    }
    return out;
}

} // namespace

std::vector<Segment> segment(std::string_view raw) {
    const auto lines = split_lines(raw);
    std::vector<Segment> out;
    std::vector<std::string_view> pending;
    const auto flush = [&] {
        if (pending.empty()) return;
        out.push_back({SegmentKind::text, join(pending, 0, pending.size()), {}, {}, {}});
        pending.clear();
    };

    std::size_t i = 0;
    while (i < lines.size()) {
        if (!opens_fence(lines[i])) {
            pending.push_back(lines[i++]);
            continue;
        }
        std::size_t close = i + 1;
        while (close < lines.size() && !closes_fence(lines[close])) ++close;
        if (close == lines.size()) {
            // unbalanced: the rest is plain text of its own
            flush();
            out.push_back({SegmentKind::text, join(lines, i, lines.size()), {}, {}, {}});
            return out;
        }
        const bool blank = std::all_of(lines.begin() + static_cast<std::ptrdiff_t>(i + 1),
                                       lines.begin() + static_cast<std::ptrdiff_t>(close),
                                       [](std::string_view l) { return trim(l).empty(); });
        if (blank) {
            // an empty block is not worth a segment; keep its lines as text
            for (std::size_t k = i; k <= close; ++k) pending.push_back(lines[k]);
            i = close + 1;
            continue;
        }
        flush();
        Segment s;
        s.language = std::string(trim(lines[i].substr(3)));
        s.kind = is_diagram_language(s.language) ? SegmentKind::diagram_placeholder : SegmentKind::code;
        s.content = join(lines, i + 1, close);
        s.fence_open = std::string(lines[i]);
        s.fence_close = std::string(lines[close]);
        out.push_back(std::move(s));
        i = close + 1;
    }
    if (!pending.empty() || out.empty()) {
        if (pending.empty()) pending.emplace_back();
        flush();
    }
    return out;
}

std::string reassemble(const std::vector<Segment>& segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) out += '\n';
        const auto& s = segments[i];
        if (s.kind == SegmentKind::text) {
            out += s.content;
        } else {
            out += s.fence_open + "\n" + s.content + "\n" + s.fence_close;
        }
    }
    return out;
}

std::string document_link(const std::string& course_id, const std::string& document_id) {
    return "/courses/" + course_id + "/documents/" + document_id;
}

std::vector<Reference> attach_references(const std::vector<RetrievalResult>& results,
                                         const KnowledgeStore& store) {
    std::vector<Reference> out;
    std::set<std::string> seen;
    for (const auto& r : results) {
        if (seen.contains(r.document_id)) continue;
        const auto chunk = store.chunk(r.chunk_id);
        const auto doc = chunk ? store.document(chunk->document_id) : std::nullopt;
        if (!doc) {
            log_warning("reference to missing chunk " + r.chunk_id + " skipped");
            continue;
        }
        seen.insert(r.document_id);
        out.push_back({doc->id, doc->title, r.chunk_id, document_link(doc->course_id, doc->id)});
    }
    return out;
}

std::optional<std::string> extract_follow_up(std::string_view raw, FollowUpPolicy policy) {
    if (policy == FollowUpPolicy::never) return std::nullopt;
    const auto lines = split_lines(raw);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        const auto line = trim(*it);
        if (line.empty()) continue;
        if (line.back() != '?') return std::nullopt;
        // last sentence of the line: text after the last terminator followed by a space
        std::size_t start = 0;
        for (std::size_t i = line.size() - 1; i-- > 0;) {
            if ((line[i] == '.' || line[i] == '!' || line[i] == '?') &&
                (line[i + 1] == ' ' || line[i + 1] == '\t')) {
                start = i + 1;
                break;
            }
        }
        return std::string(trim(line.substr(start)));
    }
    return std::nullopt;
}

StructuredResponse process_response(std::string_view raw, const std::vector<RetrievalResult>& results,
                                    const KnowledgeStore& store, FollowUpPolicy policy) {
    StructuredResponse r;
    r.segments = segment(raw);
    r.references = attach_references(results, store);
    r.follow_up_question = extract_follow_up(raw, policy);
    return r;
}

} // namespace courseassist
