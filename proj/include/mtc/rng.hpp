#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace mtc {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Derives an independent stream seed from (master seed, purpose tag, index).
/// Every stochastic stage of the workbench pulls its own stream this way, so
/// runs are reproducible and order-independent under parallel execution.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t h = detail::splitmix64(master);
    h = detail::splitmix64(h ^ detail::fnv1a(purpose));
    h = detail::splitmix64(h ^ index);
    return h;
}

/// Seeded random stream. mt19937_64 drives the bits; all variate mappings are
/// implemented here explicitly so that identical seeds give identical draws
/// independent of the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [lo, hi] inclusive. Modulo bias is rejected away.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_()); // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t u;
        do {
            u = engine_();
        } while (u >= limit);
        return lo + static_cast<std::int64_t>(u % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (two uniforms per draw, no cache).
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Poisson with the given mean. Knuth's product method below the cutoff,
    /// Hörmann's PTRS transformed rejection above it (exact in both regimes).
    std::int64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw std::domain_error("poisson: mean must be >= 0");
        if (mean == 0.0) return 0;
        if (mean < 30.0) return poisson_knuth(mean);
        return poisson_ptrs(mean);
    }

private:
    std::int64_t poisson_knuth(double mean) {
        const double limit = std::exp(-mean);
        std::int64_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    std::int64_t poisson_ptrs(double mean) {
        const double smu = std::sqrt(mean);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::fabs(u);
            const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kd);
            if (kd < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kd * std::log(mean) - mean - std::lgamma(kd + 1.0)) {
                return static_cast<std::int64_t>(kd);
            }
        }
    }

    std::mt19937_64 engine_;
};

/// Convenience: stream for (master, purpose, index).
inline Rng derive_stream(std::uint64_t master, std::string_view purpose,
                         std::uint64_t index = 0) {
    return Rng(derive_seed(master, purpose, index));
}

} // namespace mtc
