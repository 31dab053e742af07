#include "courseassist/conversation.hpp"

#include "json_codec.hpp"

#include <istream>
#include <ostream>

namespace courseassist {

using nlohmann::json;

std::string_view to_string(MessageRole role) {
    return role == MessageRole::user ? "user" : "assistant";
}

std::string_view to_string(UserKind kind) {
    return kind == UserKind::student ? "student" : "developer";
}

std::size_t rounds(const Conversation& c) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < c.messages.size(); ++i) {
        const auto& q = c.messages[i];
        const auto& a = c.messages[i + 1];
        if (q.role == MessageRole::user && a.role == MessageRole::assistant && !a.is_error_turn()) ++n;
    }
    return n;
}

ConversationMode conversation_mode(const Conversation& c) {
    for (const auto& m : c.messages) {
        if (m.role == MessageRole::user) return m.metadata.mode;
    }
    return c.mode_at_start;
}

bool well_formed(const Conversation& c) {
    if (c.last_activity_at < c.started_at) return false;
    for (std::size_t i = 0; i < c.messages.size(); ++i) {
        const auto& m = c.messages[i];
        const auto expected = i % 2 == 0 ? MessageRole::user : MessageRole::assistant;
        if (m.role != expected) return false;
        if (m.role == MessageRole::assistant && !m.is_error_turn() && !m.metadata.dispatch) return false;
    }
    return true;
}

std::string to_export_line(const Conversation& c) { return json(c).dump(); }

Conversation parse_export_line(std::string_view line) {
    try {
        return json::parse(line).get<Conversation>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_input, std::string("export record: ") + e.what());
    }
}

void write_export(std::ostream& out, const std::vector<Conversation>& conversations) {
    for (const auto& c : conversations) out << to_export_line(c) << '\n';
}

std::vector<Conversation> read_export(std::istream& in) {
    std::vector<Conversation> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(parse_export_line(line));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

const std::vector<std::string>& anonymization_deny_list() {
    static const std::vector<std::string> keys{"name",       "email",      "account_id",
                                               "raw_account", "username",   "full_name",
                                               "student_id", "ip_address", "phone"};
    return keys;
}

namespace {

void scan(const json& j, const std::string& path, std::vector<std::string>& hits) {
    const auto& deny = anonymization_deny_list();
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto key_path = path + "/" + it.key();
            if (std::find(deny.begin(), deny.end(), to_lower(it.key())) != deny.end()) {
                hits.push_back(key_path);
            }
            scan(it.value(), key_path, hits);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) scan(j[i], path + "/" + std::to_string(i), hits);
    }
}

} // namespace

std::vector<std::string> scan_for_denied_fields(std::string_view export_line) {
    std::vector<std::string> hits;
    scan(json::parse(export_line), "", hits);
    return hits;
}

} // namespace courseassist
