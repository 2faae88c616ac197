#pragma once

#include <cstdint>
#include <array>

namespace fsqkd {

// SplitMix64 step; also used as a one-shot mixer for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b * 0xD1B54A32D192ED03ULL);
    return splitmix64(s);
}

inline double u64_to_unit_double(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// xoshiro256** seeded via SplitMix64. Identical seed -> identical stream.
// All simulation draws go through this class so results are portable
// across compilers (no std::normal_distribution etc.).
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();
    double next_double();                 // uniform in [0, 1)
    double next_unit_open();              // uniform in (0, 1]
    bool bernoulli(double p);
    double gaussian();                    // standard normal, Box-Muller
    double exponential(double rate);
    std::uint64_t poisson(double mean);   // inversion below 30, PTRS above

    // Independent child stream; derivation depends only on (seed, tag),
    // not on how much of this stream has been consumed.
    RandomSource derive(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_;
};

// Stream-derivation tags. Each simulation stage draws from its own
// derived stream so block decomposition never changes results.
namespace rng_tag {
inline constexpr std::uint64_t kTape     = 0x7461706531ULL;
inline constexpr std::uint64_t kCoupling = 0x636f75706cULL;
inline constexpr std::uint64_t kSignal   = 0x7369676e61ULL;
inline constexpr std::uint64_t kNoise    = 0x6e6f697365ULL;
inline constexpr std::uint64_t kReceiver = 0x7263767231ULL;
inline constexpr std::uint64_t kCascade  = 0x6361736361ULL;
inline constexpr std::uint64_t kPrivAmp  = 0x746f65706cULL;
inline constexpr std::uint64_t kVerify   = 0x7665726966ULL;
}

} // namespace fsqkd
