#pragma once

#include "courseassist/conversation.hpp"
#include "courseassist/course_config.hpp"
#include "courseassist/knowledge_store.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

struct sqlite3;

namespace courseassist {

struct ExportFilter {
    std::optional<Timestamp> from;  // inclusive, on started_at
    std::optional<Timestamp> to;    // exclusive
    bool include_developers = false;
};

/// SQLite-backed persistence for course configs, documents, chunks and
/// conversations. One connection, serialized by an internal mutex; every
/// multi-row write is a single transaction.
class Storage {
public:
    /// ":memory:" gives a private in-memory database.
    explicit Storage(const std::string& path);
    ~Storage();

    Storage(const Storage&) = delete;
    Storage& operator=(const Storage&) = delete;

    void save_course_config(const CourseConfig& config);
    std::vector<CourseConfig> load_course_configs();

    void save_document(const Document& document, const std::vector<Chunk>& chunks,
                       const std::vector<std::string>& retired_ids);
    std::vector<std::pair<Document, std::vector<Chunk>>> load_documents();

    void insert_conversation(const Conversation& conversation);
    /// Appends a user/assistant pair and bumps last_activity_at atomically.
    void append_turn(const std::string& conversation_id, const Message& user, const Message& assistant,
                     Timestamp last_activity);
    void set_shared(const std::string& conversation_id, bool shared);

    std::optional<Conversation> load_conversation(const std::string& conversation_id);
    /// Ordered by started_at, then id.
    std::vector<Conversation> load_conversations(const std::string& course_id, const ExportFilter& filter);
    /// Replaces conversations with the same id; all-or-nothing.
    void import_conversations(const std::vector<Conversation>& conversations);

private:
    class Statement;
    class Transaction;

    void exec(const char* sql);
    void write_conversation_locked(const Conversation& c);
    std::vector<Message> load_messages_locked(const std::string& conversation_id);

    std::mutex mutex_;
    sqlite3* db_ = nullptr;
};

} // namespace courseassist
