#include "json_codec.hpp"

namespace courseassist {

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

} // namespace

void to_json(json& j, DocumentKind k) { j = std::string(to_string(k)); }
void from_json(const json& j, DocumentKind& k) { k = parse_document_kind(j.get<std::string>()); }
void to_json(json& j, ConversationMode m) { j = std::string(to_string(m)); }
void from_json(const json& j, ConversationMode& m) { m = parse_mode(j.get<std::string>()); }
void to_json(json& j, MessageRole r) { j = std::string(to_string(r)); }

void from_json(const json& j, MessageRole& r) {
    const auto s = j.get<std::string>();
    if (s == "user") r = MessageRole::user;
    else if (s == "assistant") r = MessageRole::assistant;
    else throw Error(ErrorCode::malformed_input, "unknown role: " + s);
}

void to_json(json& j, UserKind k) { j = std::string(to_string(k)); }

void from_json(const json& j, UserKind& k) {
    const auto s = j.get<std::string>();
    if (s == "student") k = UserKind::student;
    else if (s == "developer") k = UserKind::developer;
    else throw Error(ErrorCode::malformed_input, "unknown user kind: " + s);
}

void to_json(json& j, const RetrievalResult& r) {
    j = {{"chunk_id", r.chunk_id}, {"document_id", r.document_id}, {"score", r.score}, {"rank", r.rank}};
}

void from_json(const json& j, RetrievalResult& r) {
    r.chunk_id = j.at("chunk_id").get<std::string>();
    r.document_id = j.at("document_id").get<std::string>();
    r.score = j.at("score").get<double>();
    r.rank = j.at("rank").get<int>();
}

void to_json(json& j, const HomeworkVerdict& v) {
    j = {{"is_homework", v.is_homework},
         {"max_similarity", v.max_similarity},
         {"matched_chunk", opt(v.matched_chunk)},
         {"llm_consulted", v.llm_consulted},
         {"llm_verdict", opt(v.llm_verdict)},
         {"llm_failed", v.llm_failed}};
}

void from_json(const json& j, HomeworkVerdict& v) {
    v.is_homework = j.at("is_homework").get<bool>();
    v.max_similarity = j.at("max_similarity").get<double>();
    v.matched_chunk = get_opt<std::string>(j, "matched_chunk");
    v.llm_consulted = j.at("llm_consulted").get<bool>();
    v.llm_verdict = get_opt<bool>(j, "llm_verdict");
    v.llm_failed = j.value("llm_failed", false);
}

void to_json(json& j, const DispatchDecision& d) {
    json filter = nullptr;
    if (d.retrieval_kind_filter) {
        filter = json::array();
        for (auto k : *d.retrieval_kind_filter) filter.push_back(k);
    }
    j = {{"mode", d.mode}, {"homework", d.homework}, {"advisory", d.advisory},
         {"retrieval_kind_filter", filter}};
}

void from_json(const json& j, DispatchDecision& d) {
    d.mode = j.at("mode").get<ConversationMode>();
    d.homework = j.at("homework").get<HomeworkVerdict>();
    d.advisory = j.at("advisory").get<bool>();
    d.retrieval_kind_filter.reset();
    if (auto& f = j.at("retrieval_kind_filter"); !f.is_null()) {
        d.retrieval_kind_filter.emplace();
        for (auto& k : f) d.retrieval_kind_filter->insert(k.get<DocumentKind>());
    }
}

void to_json(json& j, const Message& m) {
    json meta = {{"mode", m.metadata.mode}};
    if (m.role == MessageRole::assistant) {
        meta["dispatch"] = opt(m.metadata.dispatch);
        meta["retrieval"] = m.metadata.retrieval;
        meta["has_follow_up"] = m.metadata.has_follow_up;
        meta["advisory_shown"] = m.metadata.advisory_shown;
        meta["error"] = opt(m.metadata.error);
    }
    j = {{"id", m.id}, {"role", m.role}, {"text", m.text}, {"created_at", m.created_at}, {"metadata", meta}};
}

void from_json(const json& j, Message& m) {
    m.id = j.at("id").get<std::string>();
    m.role = j.at("role").get<MessageRole>();
    m.text = j.at("text").get<std::string>();
    m.created_at = j.at("created_at").get<Timestamp>();
    const auto& meta = j.at("metadata");
    m.metadata = {};
    m.metadata.mode = meta.at("mode").get<ConversationMode>();
    if (m.role == MessageRole::assistant) {
        m.metadata.dispatch = get_opt<DispatchDecision>(meta, "dispatch");
        m.metadata.retrieval = meta.value("retrieval", std::vector<RetrievalResult>{});
        m.metadata.has_follow_up = meta.value("has_follow_up", false);
        m.metadata.advisory_shown = meta.value("advisory_shown", false);
        m.metadata.error = get_opt<std::string>(meta, "error");
    }
}

void to_json(json& j, const Conversation& c) {
    j = {{"id", c.id},
         {"course_id", c.course_id},
         {"user_ref", c.user_ref},
         {"user_kind", c.user_kind},
         {"mode_at_start", c.mode_at_start},
         {"started_at", c.started_at},
         {"last_activity_at", c.last_activity_at},
         {"messages", c.messages},
         {"shared", c.shared}};
}

void from_json(const json& j, Conversation& c) {
    c.id = j.at("id").get<std::string>();
    c.course_id = j.at("course_id").get<std::string>();
    c.user_ref = j.at("user_ref").get<std::string>();
    c.user_kind = j.at("user_kind").get<UserKind>();
    c.mode_at_start = j.at("mode_at_start").get<ConversationMode>();
    c.started_at = j.at("started_at").get<Timestamp>();
    c.last_activity_at = j.at("last_activity_at").get<Timestamp>();
    c.messages = j.at("messages").get<std::vector<Message>>();
    c.shared = j.value("shared", false);
}

void to_json(json& j, const Segment& s) {
    j = {{"kind", std::string(to_string(s.kind))}, {"content", s.content}};
    if (s.kind != SegmentKind::text) j["language"] = s.language;
}

void to_json(json& j, const Reference& r) {
    j = {{"document_id", r.document_id}, {"title", r.title}, {"chunk_id", r.chunk_id}, {"link", r.link}};
}

void to_json(json& j, const StructuredResponse& r) {
    j = {{"segments", r.segments},
         {"references", r.references},
         {"follow_up_question", opt(r.follow_up_question)},
         {"disclaimer", r.disclaimer}};
}

json document_summary(const Document& d) {
    return {{"id", d.id},
            {"course_id", d.course_id},
            {"title", d.title},
            {"kind", d.kind},
            {"source_uri", opt(d.source_uri)},
            {"uploaded_at", d.uploaded_at},
            {"version", d.version},
            {"active", d.active},
            {"link", document_link(d.course_id, d.id)}};
}

} // namespace courseassist
