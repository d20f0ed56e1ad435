// Counter-based random number streams (Philox 4x32-10).
//
// Every measurement shot owns a RandomSource identified by (seed, stream_id).
// Draws are a pure function of (seed, stream_id, draw counter), so runs are
// bit-reproducible no matter how shots are scheduled across threads.

#pragma once

#include <array>
#include <cstdint>

namespace cycleq {

namespace detail {

// Philox 4x32-10 constants (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3").
inline constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = std::uint64_t{kPhiloxM4x32A} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kPhiloxM4x32B} * ctr[2];
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, key);
        if (round != 9) {
            key[0] += kPhiloxW32A;
            key[1] += kPhiloxW32B;
        }
    }
    return ctr;
}

// SplitMix64 step; used for deterministic shuffles, not for sampling.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

// One independent random stream. The 128-bit Philox counter block is laid
// out as (draw counter lo, draw counter hi, stream lo, stream hi) and the
// key is the 64-bit seed, so distinct (seed, stream_id) pairs never share
// a block.
class RandomSource {
public:
    RandomSource(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t draws() const { return counter_; }

    std::uint64_t next_u64() {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_),
            static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32)};
        const std::array<std::uint32_t, 2> key = {
            static_cast<std::uint32_t>(seed_),
            static_cast<std::uint32_t>(seed_ >> 32)};
        const auto words = detail::philox4x32_10(ctr, key);
        ++counter_;
        return (std::uint64_t{words[1]} << 32) | words[0];
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

// A measurement instant reduced modulo the cycle time, u in [0, 1).
struct SamplingInstant {
    double u;
};

inline SamplingInstant draw_instant(RandomSource& rng) {
    return SamplingInstant{rng.next_uniform()};
}

} // namespace cycleq
