#pragma once

#include <cstdint>

namespace pktffr {

// Counter-based random streams. Every draw is a pure function of
// (seed, stream, device id, step), so fleet trajectories do not depend on
// the order in which devices are visited.
namespace rng {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t prefix(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) ^ stream);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t id,
                            std::uint64_t step) noexcept
{
    return mix64(mix64(prefix(seed, stream) ^ id) ^ step);
}

/// Uniform draw for (id, step) on a stream whose prefix() is precomputed.
constexpr double uniform_at(std::uint64_t pre, std::uint64_t id, std::uint64_t step) noexcept
{
    return static_cast<double>(mix64(mix64(pre ^ id) ^ step) >> 11) * 0x1.0p-53;
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t id,
                         std::uint64_t step) noexcept
{
    return static_cast<double>(key(seed, stream, id, step) >> 11) * 0x1.0p-53;
}

// Stream tags
enum Stream : std::uint64_t {
    kRequest = 1,
    kArrival = 2,
    kInitial = 3,
    kDelay = 4,
    kInitialState = 5,
};

} // namespace rng
} // namespace pktffr
