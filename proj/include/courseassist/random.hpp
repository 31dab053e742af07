#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace courseassist {

/// mt19937_64 plus bounded draws whose output is fixed by the standard
/// engine alone (std distributions are implementation-defined), so seeded
/// results are identical across toolchains.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, bound); bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    /// Index drawn proportionally to integer weights (sum > 0).
    template <typename Weights>
    std::size_t weighted(const Weights& weights) {
        std::uint64_t total = 0;
        for (auto w : weights) total += static_cast<std::uint64_t>(w);
        auto x = below(total);
        for (std::size_t i = 0;; ++i) {
            const auto w = static_cast<std::uint64_t>(weights[i]);
            if (x < w) return i;
            x -= w;
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace courseassist
