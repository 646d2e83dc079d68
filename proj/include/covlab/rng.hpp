#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace covlab {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words with good avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of the stream addressed by (seed, keys...). Streams with different
/// key paths are statistically independent; the mapping is pure, so any
/// trial can be regenerated without replaying earlier ones.
std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
    return Engine(stream_seed(seed, keys));
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Engine& eng) noexcept
{
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Stream tags keep the different consumers of one seed apart.
enum class StreamTag : std::uint64_t {
    split = 1,
    thinning = 2,
    trial = 3,
    probe = 4,
    mass = 5,
    oracle = 6,
    consistency = 7,
    vc = 8,
    sandwich = 9,
    sample = 10,
};

constexpr std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

}  // namespace covlab
