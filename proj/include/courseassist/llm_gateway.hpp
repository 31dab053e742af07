#pragma once

#include "courseassist/common.hpp"
#include "courseassist/embedding.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace courseassist {

inline constexpr double kAssistantTemperature = 0.2;
inline constexpr double kVerdictTemperature = 0.0;

struct CompletionRequest {
    std::string prompt;
    double temperature = kAssistantTemperature;
    std::size_t max_output_chars = 8000;
    std::string request_id;
};

struct CompletionResult {
    std::string text;
    std::string provider_id;
    std::int64_t latency_ms = 0;
    bool truncated = false;
    int attempts = 0;
};

/// A chat-model backend. Transient failures are reported by throwing
/// Error(provider_unreachable), permanent ones with Error(provider_rejected).
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string id() const = 0;
    std::string complete(const CompletionRequest& request) { return do_complete(request); }

private:
    virtual std::string do_complete(const CompletionRequest& request) = 0;
};

struct GatewayOptions {
    int max_retries = 2;
    std::chrono::milliseconds initial_backoff{200};
    double backoff_multiplier = 2.0;
    std::chrono::milliseconds deadline{60000};
    std::size_t max_concurrent = 8;
};

/// Uniform entry point for model calls: retries transient failures with
/// exponential backoff inside a wall-clock deadline, and caps concurrent
/// in-flight requests per provider (waiters are admitted in FIFO order).
class LlmGateway {
public:
    explicit LlmGateway(std::shared_ptr<CompletionProvider> provider, GatewayOptions options = {});

    CompletionResult complete(CompletionRequest request);

    /// Asks a yes/no question at temperature 0. Throws unparseable_verdict
    /// when the reply does not start with "yes" or "no".
    bool yes_no(std::string_view question);

    const GatewayOptions& options() const noexcept { return options_; }
    CompletionProvider& provider() noexcept { return *provider_; }

private:
    class Slot;
    std::string next_request_id();

    std::shared_ptr<CompletionProvider> provider_;
    GatewayOptions options_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    std::size_t in_flight_ = 0;

    std::mutex id_mutex_;
    std::uint64_t next_request_ = 1;
};

/// Parses a leading yes/no (case-insensitive, word boundary).
std::optional<bool> parse_verdict(std::string_view reply);

struct ScriptRule {
    std::string contains;
    std::string response;
    /// Number of transient failures emitted before the rule starts answering.
    int fail_first = 0;
    /// When set, the rule always fails with this code.
    std::optional<ErrorCode> error;
};

/// Offline provider driven by ordered substring rules; first match wins.
class ScriptedProvider final : public CompletionProvider {
public:
    ScriptedProvider() = default;
    ScriptedProvider(std::vector<ScriptRule> rules, std::string default_response);

    static std::shared_ptr<ScriptedProvider> from_json(std::string_view json_text);
    static std::shared_ptr<ScriptedProvider> from_file(const std::filesystem::path& path);

    std::string id() const override { return "scripted"; }

    void add_rule(ScriptRule rule);
    void set_default_response(std::string response);

    std::size_t call_count() const;
    std::vector<std::string> prompts() const;
    /// Calls whose prompt contained `needle`.
    std::size_t calls_containing(std::string_view needle) const;
    void clear_history();

private:
    std::string do_complete(const CompletionRequest& request) override;

    struct State {
        ScriptRule rule;
        int failures_emitted = 0;
    };

    mutable std::mutex mutex_;
    std::vector<State> rules_;
    std::string default_response_;
    std::vector<std::string> prompts_;
};

/// OpenAI-compatible `/v1/chat/completions` client.
std::shared_ptr<CompletionProvider> make_http_completion_provider(HttpEndpointConfig config);

} // namespace courseassist
