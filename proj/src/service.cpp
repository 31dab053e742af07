#include "courseassist/service.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cstdio>
#include <ostream>

namespace courseassist {

CourseAssistService::CourseAssistService(std::shared_ptr<Storage> storage,
                                         std::shared_ptr<KnowledgeStore> knowledge,
                                         std::shared_ptr<LlmGateway> gateway, ServiceOptions options)
    : storage_(std::move(storage)),
      knowledge_(std::move(knowledge)),
      gateway_(std::move(gateway)),
      options_(std::move(options)),
      dispatcher_(*knowledge_, *gateway_),
      id_rng_(options_.id_seed ? *options_.id_seed : std::random_device{}()) {
    if (!options_.clock) options_.clock = now_utc;
    knowledge_->set_commit_hook([storage = storage_](const Document& d, const std::vector<Chunk>& chunks,
                                                     const std::vector<std::string>& retired) {
        storage->save_document(d, chunks, retired);
    });
}

void CourseAssistService::load_from_storage() {
    for (auto& config : storage_->load_course_configs()) {
        const auto id = config.course_id;
        knowledge_->add_course(id);
        std::lock_guard lock(configs_mutex_);
        configs_[id] = std::make_shared<const CourseConfig>(std::move(config));
    }
    for (auto& [doc, chunks] : storage_->load_documents()) {
        knowledge_->restore(std::move(doc), std::move(chunks));
    }
}

void CourseAssistService::register_course(CourseConfig config) {
    config.validate();
    storage_->save_course_config(config);
    const auto id = config.course_id;
    knowledge_->add_course(id);
    std::lock_guard lock(configs_mutex_);
    configs_[id] = std::make_shared<const CourseConfig>(std::move(config));
}

std::shared_ptr<const CourseConfig> CourseAssistService::course_config(const std::string& course_id) const {
    std::lock_guard lock(configs_mutex_);
    auto it = configs_.find(course_id);
    if (it == configs_.end()) throw Error(ErrorCode::not_found, "unknown course: " + course_id);
    return it->second;
}

std::vector<std::string> CourseAssistService::course_ids() const {
    std::lock_guard lock(configs_mutex_);
    std::vector<std::string> out;
    for (auto& [id, _] : configs_) out.push_back(id);
    return out;
}

void CourseAssistService::require_course(const std::string& course_id) const { course_config(course_id); }

namespace {

void require_educator(const Caller& caller) {
    if (caller.role != Role::educator) throw Error(ErrorCode::unauthorized, "educator role required");
}

} // namespace

void CourseAssistService::update_course_config(const std::string& course_id, CourseConfig config,
                                               const Caller& caller) {
    require_educator(caller);
    require_course(course_id);
    if (config.course_id.empty()) config.course_id = course_id;
    if (config.course_id != course_id) {
        throw Error(ErrorCode::invalid_config, "config course_id does not match " + course_id);
    }
    register_course(std::move(config));
}

std::string CourseAssistService::upload_document(const std::string& course_id, DocumentInput input,
                                                 const Caller& caller) {
    require_educator(caller);
    require_course(course_id);
    input.course_id = course_id;
    if (!input.uploaded_at) input.uploaded_at = options_.clock();
    return knowledge_->ingest_document(input);
}

std::string CourseAssistService::anonymize(const std::string& account) const {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    HMAC(EVP_sha256(), options_.anonymization_salt.data(),
         static_cast<int>(options_.anonymization_salt.size()),
         reinterpret_cast<const unsigned char*>(account.data()), account.size(), digest, &len);
    std::string out = "u-";
    char hex[3];
    for (unsigned int i = 0; i < 8 && i < len; ++i) {
        std::snprintf(hex, sizeof hex, "%02x", digest[i]);
        out += hex;
    }
    return out;
}

std::string CourseAssistService::new_conversation_id() {
    std::lock_guard lock(id_mutex_);
    char buf[24];
    std::snprintf(buf, sizeof buf, "c-%016llx", static_cast<unsigned long long>(id_rng_()));
    return buf;
}

std::string CourseAssistService::start_conversation(const std::string& course_id, const Caller& caller,
                                                    ConversationMode initial_mode) {
    require_course(course_id);
    if (caller.account.empty()) throw Error(ErrorCode::unauthorized, "caller account is required");
    Conversation c;
    c.id = new_conversation_id();
    c.course_id = course_id;
    c.user_ref = anonymize(caller.account);
    c.user_kind = caller.developer ? UserKind::developer : UserKind::student;
    c.mode_at_start = initial_mode;
    c.started_at = options_.clock();
    c.last_activity_at = c.started_at;
    storage_->insert_conversation(c);
    return c.id;
}

std::shared_ptr<std::mutex> CourseAssistService::conversation_lock(const std::string& conversation_id) {
    std::lock_guard lock(locks_mutex_);
    auto& m = conversation_locks_[conversation_id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
}

Conversation CourseAssistService::load_or_throw(const std::string& conversation_id) {
    auto c = storage_->load_conversation(conversation_id);
    if (!c) throw Error(ErrorCode::not_found, "unknown conversation: " + conversation_id);
    return std::move(*c);
}

TurnResult CourseAssistService::post_question(const std::string& conversation_id, const Caller& caller,
                                              PostQuestionRequest request) {
    if (trim(request.text).empty()) throw Error(ErrorCode::validation, "question text is empty");
    if (!utf8::is_valid(request.text)) throw Error(ErrorCode::validation, "question is not valid UTF-8");

    auto turn_lock = conversation_lock(conversation_id);
    std::lock_guard serialized(*turn_lock);

    auto conversation = load_or_throw(conversation_id);
    if (conversation.user_ref != anonymize(caller.account)) {
        throw Error(ErrorCode::unauthorized, "only the owner can post to a conversation");
    }
    const auto config = course_config(conversation.course_id);
    const auto& course = conversation.course_id;

    auto explicit_mode = request.explicit_mode;
    if (!explicit_mode && request.selected_documents.empty()) explicit_mode = conversation.mode_at_start;

    const auto decision = dispatcher_.dispatch(course, request.text, request.selected_documents,
                                               explicit_mode, config->thresholds);

    std::vector<RetrievalResult> results;
    try {
        results = knowledge_->retrieve(course, request.text, config->top_k, decision.retrieval_kind_filter);
    } catch (const Error& e) {
        log_warning("retrieval failed for course " + course + ": " + e.what());
    }

    PromptSections sections;
    sections.developer_instructions = kDeveloperInstructions;
    sections.course_description = config->description;
    sections.educator_rules = render_educator_rules(config->educator_rules);
    const auto now = options_.clock();
    sections.active_time_guidance = active_guidance(*config, now);
    for (const auto& r : results) {
        auto chunk = knowledge_->chunk(r.chunk_id);
        auto doc = knowledge_->document(r.document_id);
        if (chunk && doc) sections.retrieved_contexts.push_back({doc->title, chunk->text});
    }
    sections.history = select_history(conversation, config->history_max_rounds);
    sections.mode_instruction = mode_instruction_for(decision, *config);
    sections.follow_up_directive = follow_up_directive_for(config->follow_up_policy);
    sections.user_question = request.text;
    const auto prompt = assemble(sections, config->prompt_char_budget);

    const auto seq = conversation.messages.size();
    Message user;
    user.id = conversation.id + "-" + std::to_string(seq);
    user.role = MessageRole::user;
    user.text = request.text;
    user.created_at = now;
    user.metadata.mode = decision.mode;

    Message assistant;
    assistant.id = conversation.id + "-" + std::to_string(seq + 1);
    assistant.role = MessageRole::assistant;
    assistant.metadata.mode = decision.mode;
    assistant.metadata.dispatch = decision;
    assistant.metadata.retrieval = results;
    assistant.metadata.advisory_shown = decision.advisory;

    CompletionRequest completion;
    completion.prompt = prompt.rendered;
    completion.temperature = kAssistantTemperature;
    completion.max_output_chars = config->max_output_chars;
    completion.request_id = assistant.id;

    CompletionResult reply;
    try {
        reply = gateway_->complete(std::move(completion));
    } catch (const Error& e) {
        assistant.created_at = options_.clock();
        assistant.metadata.error = std::string(to_string(e.code()));
        assistant.metadata.advisory_shown = false;
        storage_->append_turn(conversation.id, user, assistant, assistant.created_at);
        throw;
    }

    TurnResult result;
    result.response = process_response(reply.text, results, *knowledge_, config->follow_up_policy);
    result.decision = decision;
    assistant.text = reply.text;
    assistant.created_at = options_.clock();
    assistant.metadata.has_follow_up = result.response.follow_up_question.has_value();
    storage_->append_turn(conversation.id, user, assistant, assistant.created_at);

    result.user_message_id = user.id;
    result.assistant_message_id = assistant.id;
    conversation.messages.push_back(std::move(user));
    conversation.messages.push_back(std::move(assistant));
    result.rounds = rounds(conversation);
    return result;
}

Conversation CourseAssistService::get_conversation(const std::string& conversation_id, const Caller& caller) {
    auto c = load_or_throw(conversation_id);
    if (caller.role != Role::educator && c.user_ref != anonymize(caller.account)) {
        throw Error(ErrorCode::unauthorized, "not the owner of this conversation");
    }
    return c;
}

void CourseAssistService::set_shared(const std::string& conversation_id, bool shared, const Caller& caller) {
    auto c = load_or_throw(conversation_id);
    if (c.user_ref != anonymize(caller.account)) {
        throw Error(ErrorCode::unauthorized, "only the owner can share a conversation");
    }
    storage_->set_shared(conversation_id, shared);
}

Conversation CourseAssistService::get_shared(const std::string& conversation_id) {
    auto c = storage_->load_conversation(conversation_id);
    if (!c || !c->shared) throw Error(ErrorCode::not_found, "no shared conversation " + conversation_id);
    return std::move(*c);
}

StructuredResponse CourseAssistService::structured_view(const Conversation&, const Message& message) const {
    // the stored flag, not the current course policy, decides whether a follow-up is shown
    return process_response(message.text, message.metadata.retrieval, *knowledge_,
                            message.metadata.has_follow_up ? FollowUpPolicy::always : FollowUpPolicy::never);
}

std::vector<Conversation> CourseAssistService::export_conversations(const std::string& course_id,
                                                                    const ExportFilter& filter) {
    return storage_->load_conversations(course_id, filter);
}

void CourseAssistService::export_conversations(const std::string& course_id, const ExportFilter& filter,
                                               std::ostream& out) {
    write_export(out, export_conversations(course_id, filter));
}

void CourseAssistService::import_conversations(const std::vector<Conversation>& conversations) {
    storage_->import_conversations(conversations);
}

} // namespace courseassist
