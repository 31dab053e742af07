// OpenAI-compatible HTTP adapters for embeddings and chat completions.
#include "courseassist/embedding.hpp"
#include "courseassist/llm_gateway.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

namespace courseassist {

namespace {

using nlohmann::json;

std::string api_key(const HttpEndpointConfig& c) {
    if (c.api_key_env.empty()) return {};
    const char* v = std::getenv(c.api_key_env.c_str());
    return v ? v : "";
}

json post_json(const HttpEndpointConfig& c, const std::string& path, const json& body) {
    httplib::Client client(c.endpoint);
    const auto secs = c.timeout_ms / 1000;
    const auto usecs = (c.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (auto key = api_key(c); !key.empty()) headers.emplace("Authorization", "Bearer " + key);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::provider_unreachable,
                    c.endpoint + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw Error(ErrorCode::provider_unreachable,
                    c.endpoint + path + " returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::provider_rejected,
                    c.endpoint + path + " returned HTTP " + std::to_string(res->status));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::provider_rejected, std::string("malformed provider reply: ") + e.what());
    }
}

class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(HttpEndpointConfig config, std::size_t dimension)
        : config_(std::move(config)), dimension_(dimension) {}

    std::size_t dimension() const override { return dimension_; }
    std::string id() const override { return "http:" + config_.model; }

private:
    EmbeddingVector do_embed(std::string_view text) const override {
        const auto reply = post_json(config_, "/v1/embeddings",
                                     {{"model", config_.model}, {"input", std::string(text)}});
        try {
            return reply.at("data").at(0).at("embedding").get<EmbeddingVector>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::provider_rejected, std::string("embedding reply: ") + e.what());
        }
    }

    HttpEndpointConfig config_;
    std::size_t dimension_;
};

class HttpCompletionProvider final : public CompletionProvider {
public:
    explicit HttpCompletionProvider(HttpEndpointConfig config) : config_(std::move(config)) {}

    std::string id() const override { return "http:" + config_.model; }

private:
    std::string do_complete(const CompletionRequest& request) override {
        json body = {{"model", config_.model},
                     {"temperature", request.temperature},
                     {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
        const auto reply = post_json(config_, "/v1/chat/completions", body);
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::provider_rejected, std::string("completion reply: ") + e.what());
        }
    }

    HttpEndpointConfig config_;
};

} // namespace

std::shared_ptr<EmbeddingProvider> make_http_embedding_provider(HttpEndpointConfig config,
                                                                std::size_t dimension) {
    if (config.endpoint.empty()) throw Error(ErrorCode::invalid_config, "embedding endpoint is empty");
    return std::make_shared<HttpEmbeddingProvider>(std::move(config), dimension);
}

std::shared_ptr<CompletionProvider> make_http_completion_provider(HttpEndpointConfig config) {
    if (config.endpoint.empty()) throw Error(ErrorCode::invalid_config, "llm endpoint is empty");
    return std::make_shared<HttpCompletionProvider>(std::move(config));
}

} // namespace courseassist
