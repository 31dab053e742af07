#pragma once

#include "courseassist/conversation.hpp"
#include "courseassist/course_config.hpp"
#include "courseassist/dispatcher.hpp"
#include "courseassist/knowledge_store.hpp"
#include "courseassist/llm_gateway.hpp"
#include "courseassist/prompt_assembler.hpp"
#include "courseassist/response_processor.hpp"
#include "courseassist/storage.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace courseassist {

enum class Role { student, educator };

/// Who is calling. `account` is the raw account identifier as delivered by
/// the authenticating front end; it is anonymized before anything is stored.
struct Caller {
    std::string account;
    Role role = Role::student;
    bool developer = false;
};

struct ServiceOptions {
    std::string anonymization_salt = "courseassist";
    std::function<Timestamp()> clock = now_utc;
    /// Seed for conversation ids; nullopt draws from std::random_device.
    std::optional<std::uint64_t> id_seed;
};

struct PostQuestionRequest {
    std::string text;
    std::vector<std::string> selected_documents;
    std::optional<ConversationMode> explicit_mode;
};

struct TurnResult {
    StructuredResponse response;
    DispatchDecision decision;
    std::string user_message_id;
    std::string assistant_message_id;
    std::size_t rounds = 0;
};

/// The question-answering pipeline plus conversation lifecycle:
/// dispatch -> retrieve -> history -> assemble -> complete -> process -> persist.
///
/// Turns on one conversation are serialized; different conversations run
/// concurrently. Course configs are immutable snapshots swapped on update.
class CourseAssistService {
public:
    CourseAssistService(std::shared_ptr<Storage> storage, std::shared_ptr<KnowledgeStore> knowledge,
                        std::shared_ptr<LlmGateway> gateway, ServiceOptions options = {});

    /// Loads course configs and documents persisted by earlier runs.
    void load_from_storage();

    /// Bootstrap path for operator-provided config files (no role check).
    void register_course(CourseConfig config);
    std::shared_ptr<const CourseConfig> course_config(const std::string& course_id) const;
    std::vector<std::string> course_ids() const;

    void update_course_config(const std::string& course_id, CourseConfig config, const Caller& caller);
    std::string upload_document(const std::string& course_id, DocumentInput input, const Caller& caller);

    std::string start_conversation(const std::string& course_id, const Caller& caller,
                                   ConversationMode initial_mode = ConversationMode::general);
    TurnResult post_question(const std::string& conversation_id, const Caller& caller,
                             PostQuestionRequest request);

    /// Owner, or an educator of any course, may read.
    Conversation get_conversation(const std::string& conversation_id, const Caller& caller);
    void set_shared(const std::string& conversation_id, bool shared, const Caller& caller);
    /// Shared conversations only; anything else is not_found.
    Conversation get_shared(const std::string& conversation_id);

    /// Rebuilds the structured view of a stored assistant message.
    StructuredResponse structured_view(const Conversation& conversation, const Message& message) const;

    std::vector<Conversation> export_conversations(const std::string& course_id, const ExportFilter& filter);
    void export_conversations(const std::string& course_id, const ExportFilter& filter, std::ostream& out);
    void import_conversations(const std::vector<Conversation>& conversations);

    std::string anonymize(const std::string& account) const;

    KnowledgeStore& knowledge() noexcept { return *knowledge_; }
    LlmGateway& gateway() noexcept { return *gateway_; }
    Storage& storage() noexcept { return *storage_; }

private:
    std::shared_ptr<std::mutex> conversation_lock(const std::string& conversation_id);
    Conversation load_or_throw(const std::string& conversation_id);
    void require_course(const std::string& course_id) const;
    std::string new_conversation_id();

    std::shared_ptr<Storage> storage_;
    std::shared_ptr<KnowledgeStore> knowledge_;
    std::shared_ptr<LlmGateway> gateway_;
    ServiceOptions options_;
    Dispatcher dispatcher_;

    mutable std::mutex configs_mutex_;
    std::map<std::string, std::shared_ptr<const CourseConfig>> configs_;

    std::mutex locks_mutex_;
    std::map<std::string, std::shared_ptr<std::mutex>> conversation_locks_;

    std::mutex id_mutex_;
    std::mt19937_64 id_rng_;
};

} // namespace courseassist
