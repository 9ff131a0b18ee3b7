#pragma once

#include <cstdint>
#include <random>

namespace lbs {

/// SplitMix64 finalizer; used to decorrelate (seed, stream) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream purposes, so that the Levy cloud and the Brownian flow path never
/// share random numbers even when configured with the same master seed.
enum class StreamKind : std::uint64_t {
    levy = 0x4c455659ULL,
    brownian = 0x42524f57ULL,
    initial_state = 0x494e4954ULL,
};

/// Identifies one reproducible random stream: paths are reproducible from
/// (seed, index) regardless of the order in which they are generated.
struct StreamSeed {
    std::uint64_t master = 0;
    std::uint64_t index = 0;
    StreamKind kind = StreamKind::levy;

    [[nodiscard]] std::uint64_t mixed() const noexcept {
        return splitmix64(splitmix64(master ^ static_cast<std::uint64_t>(kind)) + index);
    }
};

using Engine = std::mt19937_64;

inline Engine make_engine(const StreamSeed& s) {
    const std::uint64_t m = s.mixed();
    std::seed_seq seq{static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(m >> 32),
                      static_cast<std::uint32_t>(s.index), static_cast<std::uint32_t>(s.index >> 32)};
    return Engine(seq);
}

} // namespace lbs
