/**
 * @file random.hpp
 * @brief Seeded random streams with platform-independent variate generation.
 *
 * Every Monte Carlo path owns its own stream, seeded by hashing the root
 * seed with the path index. Uniforms come from the top 53 bits of
 * xoshiro256**, normals from Box-Muller, exponentials from the inverse CDF.
 * Nothing here depends on std::*_distribution, whose algorithms are
 * implementation-defined.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace ultimax {

/// One step of splitmix64; advances state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed splitting: independent child seed for stream `index` of `root`.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
    std::uint64_t s = root;
    const std::uint64_t a = splitmix64(s);
    std::uint64_t t = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    splitmix64(t);
    return splitmix64(t);
}

/// xoshiro256** 1.0 (Blackman and Vigna), public domain reference algorithm.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256(std::uint64_t seed) noexcept {
        for (auto& w : s_) w = splitmix64(seed);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
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

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) noexcept : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Exponential with the given rate; +inf for rate 0.
    double exponential(double rate) noexcept {
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(uniform()) / rate;
    }

private:
    Xoshiro256 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ultimax
