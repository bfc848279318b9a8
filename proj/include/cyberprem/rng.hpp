#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace cyberprem {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    // Independent stream for sample `index` under master `seed`. The stream
    // depends only on the pair, so any partition of the index space across
    // workers reproduces the same draws.
    static Rng for_stream(std::uint64_t seed, std::uint64_t index) noexcept {
        std::uint64_t a = seed;
        std::uint64_t k = splitmix64(a);
        std::uint64_t b = index ^ k;
        std::uint64_t mixed = splitmix64(b);
        mixed ^= splitmix64(a);
        return Rng(mixed);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // P(true) = prob exactly, including the endpoints 0 and 1.
    bool bernoulli(double prob) noexcept { return uniform() < prob; }

    // Uniform integer in [0, n), n > 0 (Lemire's nearly divisionless method).
    std::uint64_t below(std::uint64_t n) noexcept {
        __uint128_t m = static_cast<__uint128_t>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

namespace detail {

// Transformed rejection with squeeze (Hormann 1993), for mean >= 10.
inline std::uint64_t poisson_ptrs(double mean, Rng& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
        const double rhs = -mean + k * loglam - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(k);
    }
}

}  // namespace detail

// Poisson(mean): sequential inversion for mean <= 30, PTRS rejection above.
inline std::uint64_t sample_poisson(double mean, Rng& rng) {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) return detail::poisson_ptrs(mean, rng);
    double u = rng.uniform();
    double prob = std::exp(-mean);
    std::uint64_t k = 0;
    while (u > prob) {
        u -= prob;
        ++k;
        prob *= mean / static_cast<double>(k);
        if (prob <= 0.0) break;
    }
    return k;
}

}  // namespace cyberprem
