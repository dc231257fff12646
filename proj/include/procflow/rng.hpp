#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "procflow/common.hpp"

namespace procflow {

/// splitmix64 step, used for seed mixing and derivation.
inline std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent sub-seed from (base, tag, index). Parallel work
/// units each take a derived seed so scheduling cannot change the output.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t state = base;
    std::uint64_t mixed = splitmix64(state);
    state = mixed ^ h;
    mixed = splitmix64(state);
    state = mixed ^ index;
    return splitmix64(state);
}

/// Deterministic random source: a mt19937_64 engine (fully specified by the
/// standard) plus hand-rolled distributions, so identical seeds give
/// identical streams on every platform. std::*_distribution is
/// implementation-defined and deliberately avoided.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, n), unbiased via rejection sampling.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) fail(ErrorCategory::internal, "Rng::below(0)");
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform integer in [lo, hi).
    std::int64_t int_range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo)));
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller. Draws two uniforms per call and
    /// keeps no cached spare, so the stream position is call-count exact.
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    /// Poisson count. Knuth's product method for small means; large means
    /// split in half (Poisson additivity) to dodge exp underflow.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 30.0) {
            double half = mean / 2.0;
            return poisson(half) + poisson(mean - half);
        }
        double limit = std::exp(-mean);
        double prod = uniform();
        std::uint64_t count = 0;
        while (prod > limit) {
            ++count;
            prod *= uniform();
        }
        return count;
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T> &values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// k distinct indices from [0, n), in ascending order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) fail(ErrorCategory::internal, "sample_without_replacement: k > n");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        // partial Fisher-Yates: fix the first k slots
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace procflow
