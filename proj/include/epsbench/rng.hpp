#pragma once

// Counter-based random numbers.
//
// Every stream is identified by a 64-bit key; draw i of a stream is a pure
// function of (key, i). That makes streams splittable (derive_seed) and lets
// any position of a stream be regenerated without replaying the prefix. All
// distributions are implemented here so the output is identical across
// standard-library implementations.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace epsbench {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed + kGoldenGamma) ^ mix64(index * 0xd1b54a32d192ed03ULL + 1));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                    std::uint64_t index = 0) noexcept {
    return derive_seed(derive_seed(seed, fnv1a(tag)), index);
}

class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
        : base_(mix64(key ^ 0x6a09e667f3bcc909ULL)), counter_(counter) {}

    // Draw at an absolute position; does not move the cursor.
    constexpr std::uint64_t at(std::uint64_t position) const noexcept {
        return mix64(base_ + (position + 1) * kGoldenGamma);
    }

    constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

    std::uint64_t counter() const noexcept { return counter_; }

    static constexpr double to_unit(std::uint64_t bits) noexcept {
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    // [0, 1)
    double uniform() noexcept { return to_unit(next_u64()); }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t index(std::uint64_t n) noexcept {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Box-Muller, one variate per pair of draws.
    double normal() noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Marsaglia-Tsang; shape < 1 handled by the u^(1/shape) boost.
    double gamma(double shape) noexcept {
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0);
            const double u = 1.0 - uniform();
            return g * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = 0.0;
            double v = 0.0;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = 1.0 - uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

private:
    std::uint64_t base_;
    std::uint64_t counter_;
};

}  // namespace epsbench
