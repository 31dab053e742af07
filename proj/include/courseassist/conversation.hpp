#pragma once

#include "courseassist/common.hpp"
#include "courseassist/dispatcher.hpp"
#include "courseassist/mode.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace courseassist {

enum class MessageRole { user, assistant };
enum class UserKind { student, developer };

std::string_view to_string(MessageRole role);
std::string_view to_string(UserKind kind);

struct MessageMetadata {
    ConversationMode mode = ConversationMode::general;
    // Assistant-only fields below.
    std::optional<DispatchDecision> dispatch;
    std::vector<RetrievalResult> retrieval;
    bool has_follow_up = false;
    bool advisory_shown = false;
    /// Set on an assistant error turn (the gateway failed); holds the error code.
    std::optional<std::string> error;

    bool operator==(const MessageMetadata&) const = default;
};

struct Message {
    std::string id;
    MessageRole role = MessageRole::user;
    std::string text;
    Timestamp created_at{};
    MessageMetadata metadata;

    bool is_error_turn() const noexcept { return role == MessageRole::assistant && metadata.error.has_value(); }
    bool operator==(const Message&) const = default;
};

struct Conversation {
    std::string id;
    std::string course_id;
    /// Anonymized opaque id, never a raw account identifier.
    std::string user_ref;
    UserKind user_kind = UserKind::student;
    ConversationMode mode_at_start = ConversationMode::general;
    Timestamp started_at{};
    Timestamp last_activity_at{};
    std::vector<Message> messages;
    bool shared = false;

    bool operator==(const Conversation&) const = default;
};

/// User messages that received a non-error assistant reply.
std::size_t rounds(const Conversation& conversation);

/// Mode of the first question, or the starting mode when nothing was asked.
ConversationMode conversation_mode(const Conversation& conversation);

/// Checks alternation (user first) and assistant metadata completeness.
bool well_formed(const Conversation& conversation);

// Export format: newline-delimited JSON, one conversation per line, keys
// sorted, timestamps ISO-8601 UTC.
std::string to_export_line(const Conversation& conversation);
Conversation parse_export_line(std::string_view line);
void write_export(std::ostream& out, const std::vector<Conversation>& conversations);
std::vector<Conversation> read_export(std::istream& in);

/// Keys that must never appear anywhere in an exported record.
const std::vector<std::string>& anonymization_deny_list();
/// Returns offending key paths found in a JSON line (empty when clean).
std::vector<std::string> scan_for_denied_fields(std::string_view export_line);

} // namespace courseassist
