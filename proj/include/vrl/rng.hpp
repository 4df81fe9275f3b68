// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace vrl {

// Stream ids for the derived generators. World draws never share a stream
// with perception, critic or actor draws.
enum class Stream : std::uint64_t {
    World = 0,
    Perception = 1,
    Critic = 2,
    Actor = 3,
};

// Counter-based generator: output i of (seed, stream) is a pure function of
// (seed, stream, i), so the full state is three integers and serializes
// exactly.
class Rng {
public:
    Rng() = default;
    Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
        : seed_(seed), stream_(stream), counter_(counter) {}

    static Rng derive(std::uint64_t seed, Stream stream) {
        return Rng(seed, static_cast<std::uint64_t>(stream));
    }

    std::uint64_t next_u64() {
        const std::uint64_t key = mix(seed_ ^ mix(stream_ + 0x632be59bd9b4e019ULL));
        return mix(key + (counter_++) * 0x9e3779b97f4a7c15ULL);
    }

    // [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1)
    double uniform_open01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift; bias is below 2^-64 * n and irrelevant here.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Always consumes exactly one draw so that streams stay aligned when
    // probabilities change between runs.
    bool bernoulli(double p) {
        const double u = uniform01();
        return u < p;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

    friend bool operator==(const Rng&, const Rng&) = default;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
};

// Seed of episode `episode_index` within a lineage seeded by `lineage_seed`.
inline std::uint64_t episode_seed(std::uint64_t lineage_seed, std::uint64_t episode_index) {
    return Rng::mix(lineage_seed * 0x100000001b3ULL + episode_index);
}

}  // namespace vrl
