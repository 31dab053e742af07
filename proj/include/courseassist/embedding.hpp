#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace courseassist {

using EmbeddingVector = std::vector<double>;

/// Turns text into a fixed-dimension vector. Implementations override the
/// private hook; the public entry point enforces the shared contract
/// (non-empty input, declared dimension, finite values).
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::string id() const = 0;

    EmbeddingVector embed(std::string_view text) const;

private:
    virtual EmbeddingVector do_embed(std::string_view text) const = 0;
};

/// Offline deterministic embedder: each whitespace-separated token is hashed
/// (FNV-1a, 64 bit) into one of `dimension` buckets, bucket counts are
/// L2-normalized. Text without tokens hashes as a single token of itself.
class HashEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDimension = 64;

    explicit HashEmbedder(std::size_t dimension = kDefaultDimension);

    std::size_t dimension() const override { return dimension_; }
    std::string id() const override { return "hash"; }

    /// Bucket a token lands in; exposed so tests can build collision-free fixtures.
    std::size_t bucket_of(std::string_view token) const noexcept;

private:
    EmbeddingVector do_embed(std::string_view text) const override;

    std::size_t dimension_;
};

std::uint64_t fnv1a64(std::string_view data) noexcept;

/// Cosine of the angle between two vectors, clamped to [-1, 1].
/// Throws dimension_mismatch or zero_vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct HttpEndpointConfig {
    std::string endpoint;      // e.g. "https://api.openai.com"
    std::string model;
    std::string api_key_env;   // name of the env var holding the key
    int timeout_ms = 30000;
};

/// OpenAI-compatible `/v1/embeddings` client.
std::shared_ptr<EmbeddingProvider> make_http_embedding_provider(HttpEndpointConfig config,
                                                                std::size_t dimension);

} // namespace courseassist
