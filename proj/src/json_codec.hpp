// Internal JSON mapping for the domain types. Not installed.
#pragma once

#include "courseassist/conversation.hpp"
#include "courseassist/course_config.hpp"
#include "courseassist/knowledge_store.hpp"
#include "courseassist/response_processor.hpp"

#include <json.hpp>

namespace nlohmann {

template <>
struct adl_serializer<courseassist::Timestamp> {
    static void to_json(json& j, const courseassist::Timestamp& t) {
        j = courseassist::format_timestamp(t);
    }
    static void from_json(const json& j, courseassist::Timestamp& t) {
        t = courseassist::parse_timestamp(j.get<std::string>());
    }
};

} // namespace nlohmann

namespace courseassist {

using nlohmann::json;

void to_json(json& j, DocumentKind k);
void from_json(const json& j, DocumentKind& k);
void to_json(json& j, ConversationMode m);
void from_json(const json& j, ConversationMode& m);
void to_json(json& j, MessageRole r);
void from_json(const json& j, MessageRole& r);
void to_json(json& j, UserKind k);
void from_json(const json& j, UserKind& k);

void to_json(json& j, const RetrievalResult& r);
void from_json(const json& j, RetrievalResult& r);
void to_json(json& j, const HomeworkVerdict& v);
void from_json(const json& j, HomeworkVerdict& v);
void to_json(json& j, const DispatchDecision& d);
void from_json(const json& j, DispatchDecision& d);
void to_json(json& j, const Message& m);
void from_json(const json& j, Message& m);
void to_json(json& j, const Conversation& c);
void from_json(const json& j, Conversation& c);

void to_json(json& j, const Segment& s);
void to_json(json& j, const Reference& r);
void to_json(json& j, const StructuredResponse& r);

json document_summary(const Document& d);

} // namespace courseassist
