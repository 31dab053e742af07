#include "courseassist/llm_gateway.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

namespace courseassist {

class LlmGateway::Slot {
public:
    explicit Slot(LlmGateway& g) : g_(g) {
        std::unique_lock lock(g_.queue_mutex_);
        const auto ticket = g_.next_ticket_++;
        g_.queue_cv_.wait(lock, [&] {
            return ticket == g_.serving_ && g_.in_flight_ < g_.options_.max_concurrent;
        });
        ++g_.serving_;
        ++g_.in_flight_;
        g_.queue_cv_.notify_all();
    }
    ~Slot() {
        {
            std::lock_guard lock(g_.queue_mutex_);
            --g_.in_flight_;
        }
        g_.queue_cv_.notify_all();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

private:
    LlmGateway& g_;
};

LlmGateway::LlmGateway(std::shared_ptr<CompletionProvider> provider, GatewayOptions options)
    : provider_(std::move(provider)), options_(options) {
    if (!provider_) throw Error(ErrorCode::invalid_config, "gateway needs a provider");
    if (options_.max_retries < 0) throw Error(ErrorCode::invalid_config, "max_retries must be >= 0");
    if (options_.max_concurrent == 0) options_.max_concurrent = 1;
}

std::string LlmGateway::next_request_id() {
    std::lock_guard lock(id_mutex_);
    return "req-" + std::to_string(next_request_++);
}

CompletionResult LlmGateway::complete(CompletionRequest request) {
    using clock = std::chrono::steady_clock;
    if (request.request_id.empty()) request.request_id = next_request_id();

    Slot slot(*this);
    const auto started = clock::now();
    const auto deadline = started + options_.deadline;
    auto backoff = options_.initial_backoff;

    for (int attempt = 1;; ++attempt) {
        try {
            auto text = provider_->complete(request);
            CompletionResult result;
            result.provider_id = provider_->id();
            result.attempts = attempt;
            if (utf8::length(text) > request.max_output_chars) {
                text.resize(utf8::byte_offset(text, request.max_output_chars));
                result.truncated = true;
            }
            result.text = std::move(text);
            result.latency_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - started).count();
            return result;
        } catch (const Error& e) {
            if (!e.retryable()) {
                throw Error(e.code(), e.what(), request.request_id);
            }
            if (attempt > options_.max_retries) {
                throw Error(ErrorCode::deadline_exceeded,
                            "retries exhausted after " + std::to_string(attempt) +
                                " attempts: " + e.what(),
                            request.request_id);
            }
        }
        if (clock::now() + backoff >= deadline) {
            throw Error(ErrorCode::deadline_exceeded, "deadline exceeded", request.request_id);
        }
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(backoff.count()) * options_.backoff_multiplier));
    }
}

std::optional<bool> parse_verdict(std::string_view reply) {
    const auto t = to_lower(trim(reply));
    const auto starts_word = [&](std::string_view w) {
        return t.compare(0, w.size(), w) == 0 &&
               (t.size() == w.size() || !std::isalpha(static_cast<unsigned char>(t[w.size()])));
    };
    if (starts_word("yes")) return true;
    if (starts_word("no")) return false;
    return std::nullopt;
}

bool LlmGateway::yes_no(std::string_view question) {
    CompletionRequest req;
    req.prompt = "Answer with exactly one word, \"yes\" or \"no\".\n\n" + std::string(question);
    req.temperature = kVerdictTemperature;
    req.max_output_chars = 64;
    auto result = complete(std::move(req));
    auto verdict = parse_verdict(result.text);
    if (!verdict) {
        throw Error(ErrorCode::unparseable_verdict, "unparseable yes/no reply: " + result.text);
    }
    return *verdict;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptRule> rules, std::string default_response)
    : default_response_(std::move(default_response)) {
    for (auto& r : rules) rules_.push_back({std::move(r), 0});
}

namespace {

ErrorCode parse_script_error(const std::string& s) {
    if (s == "transient") return ErrorCode::provider_unreachable;
    if (s == "rejected") return ErrorCode::provider_rejected;
    throw Error(ErrorCode::malformed_input, "unknown scripted error kind: " + s);
}

} // namespace

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_json(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_input, std::string("mock script: ") + e.what());
    }
    auto p = std::make_shared<ScriptedProvider>();
    p->set_default_response(j.value("default_response", std::string{}));
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
        ScriptRule rule;
        rule.contains = r.at("contains").get<std::string>();
        rule.response = r.value("response", std::string{});
        rule.fail_first = r.value("fail_first", 0);
        if (r.contains("error")) rule.error = parse_script_error(r.at("error").get<std::string>());
        p->add_rule(std::move(rule));
    }
    return p;
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open mock script " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void ScriptedProvider::add_rule(ScriptRule rule) {
    std::lock_guard lock(mutex_);
    rules_.push_back({std::move(rule), 0});
}

void ScriptedProvider::set_default_response(std::string response) {
    std::lock_guard lock(mutex_);
    default_response_ = std::move(response);
}

std::size_t ScriptedProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return prompts_.size();
}

std::vector<std::string> ScriptedProvider::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

std::size_t ScriptedProvider::calls_containing(std::string_view needle) const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (auto& p : prompts_) n += p.find(needle) != std::string::npos;
    return n;
}

void ScriptedProvider::clear_history() {
    std::lock_guard lock(mutex_);
    prompts_.clear();
}

std::string ScriptedProvider::do_complete(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    prompts_.push_back(request.prompt);
    for (auto& state : rules_) {
        if (request.prompt.find(state.rule.contains) == std::string::npos) continue;
        if (state.rule.error) throw Error(*state.rule.error, "scripted failure");
        if (state.failures_emitted < state.rule.fail_first) {
            ++state.failures_emitted;
            throw Error(ErrorCode::provider_unreachable, "scripted transient failure");
        }
        return state.rule.response;
    }
    return default_response_;
}

} // namespace courseassist
