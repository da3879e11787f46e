#pragma once
// Seeded random streams for the simulator.
//
// Stream derivation: run r of a simulation with master seed s draws from
// Xoshiro256** seeded by four consecutive SplitMix64 outputs starting from
// mix64(s) ^ mix64(r + 1). Every run therefore owns an independent stream and
// results do not depend on how runs are scheduled across threads.

#include <cstdint>
#include <limits>

namespace cgv::rng {

/// SplitMix64 finalizer (Stafford variant 13).
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t state_;
};

/// Xoshiro256** (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    constexpr explicit Xoshiro256(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm();
    }

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

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// true with probability p; p <= 0 never, p >= 1 always.
    constexpr bool bernoulli(double p) noexcept { return uniform01() < p; }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
};

/// Seed of the substream used by run `run_index` under `master_seed`.
[[nodiscard]] constexpr std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t run_index) noexcept {
    return mix64(master_seed) ^ mix64(run_index + 1);
}

[[nodiscard]] constexpr Xoshiro256 run_stream(std::uint64_t master_seed, std::uint64_t run_index) noexcept {
    return Xoshiro256(substream_seed(master_seed, run_index));
}

}  // namespace cgv::rng
