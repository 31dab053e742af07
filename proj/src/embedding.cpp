#include "courseassist/embedding.hpp"

#include "courseassist/common.hpp"

#include <algorithm>
#include <cmath>

namespace courseassist {

EmbeddingVector EmbeddingProvider::embed(std::string_view text) const {
    if (text.empty()) throw Error(ErrorCode::validation, "cannot embed empty text");
    auto v = do_embed(text);
    if (v.size() != dimension()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "provider " + id() + " returned " + std::to_string(v.size()) +
                        " values, expected " + std::to_string(dimension()));
    }
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorCode::provider_rejected, "non-finite embedding value");
    }
    return v;
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw Error(ErrorCode::invalid_config, "embedding dimension must be positive");
}

std::size_t HashEmbedder::bucket_of(std::string_view token) const noexcept {
    return static_cast<std::size_t>(fnv1a64(token) % dimension_);
}

EmbeddingVector HashEmbedder::do_embed(std::string_view text) const {
    EmbeddingVector v(dimension_, 0.0);
    constexpr std::string_view ws = " \t\r\n\f\v";
    bool any = false;
    std::size_t pos = text.find_first_not_of(ws);
    while (pos != std::string_view::npos) {
        auto end = text.find_first_of(ws, pos);
        auto token = text.substr(pos, end == std::string_view::npos ? end : end - pos);
        v[bucket_of(token)] += 1.0;
        any = true;
        pos = end == std::string_view::npos ? end : text.find_first_not_of(ws, end);
    }
    if (!any) v[bucket_of(text)] = 1.0;

    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::dimension_mismatch, "cosine of vectors with different dimensions");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::zero_vector, "cosine of a zero vector");
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

} // namespace courseassist
