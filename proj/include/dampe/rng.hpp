#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dampe {

/// Deterministic RNG. All sampling goes through hand-rolled transforms so a
/// seed pins the whole stream bit-for-bit, independent of the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (cached second value).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Categorical draw from a probability vector (assumed to sum to ~1).
    std::size_t categorical(const double* probs, std::size_t k) {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < k; ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return k - 1;
    }

    /// Sample `count` distinct values from items without replacement
    /// (partial Fisher-Yates on a scratch copy; order of draws preserved).
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t count) {
        if (count >= items.size()) return items;
        std::vector<T> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_index(items.size() - i));
            std::swap(items[i], items[j]);
            out.push_back(items[i]);
        }
        return out;
    }

    /// Independent child stream; distinct tags give distinct streams.
    Rng fork(std::uint64_t tag) {
        return Rng(engine_() ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dampe
