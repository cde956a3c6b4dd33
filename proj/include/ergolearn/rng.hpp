#pragma once

#include <cstdint>
#include <random>

namespace ergolearn {

/* 64-bit finalizing mixer. Pure function of the input word; used to derive
 * independent substream seeds and the war component's lazily probed
 * parameter bits, so results cannot depend on probe order. */
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/* Named substreams of one run seed. Keeping path sampling, hidden-state
 * initialization and parameter draws on separate streams makes every
 * artifact reproducible even if one consumer draws a different amount. */
enum class Stream : std::uint64_t {
    path = 1,
    init = 2,
    theta = 3,
    aux = 4,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
    return splitmix64(splitmix64(seed) + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(s));
}

/// Seeded generator. All randomness in the library flows through this type;
/// the underlying engine is fixed so identical seeds give identical paths
/// on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, Stream s) : engine_(stream_seed(seed, s)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool fair_bit() { return (engine_() >> 63) != 0; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Count of leading heads in fair flips: P(k) = 2^-(k+1), k = 0, 1, ...
    int geometric_fair() {
        int k = 0;
        while (fair_bit()) ++k;
        return k;
    }

private:
    std::mt19937_64 engine_;
};

/* Identifier recorded in artifact metadata. Bump when the engine or any
 * derivation above changes, since that changes every sampled path. */
inline constexpr const char* kPrngId = "mt19937_64+splitmix64-streams-v1";

}  // namespace ergolearn
