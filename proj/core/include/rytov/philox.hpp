#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace rytov::rng {

/// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw,
/// "Parallel random numbers: as easy as 1, 2, 3", SC 2011). The output is a
/// pure function of (key, counter), so streams indexed by
/// (realization, cell) are reproducible across platforms and independent of
/// evaluation order.
struct Philox4x32 {
    std::array<std::uint32_t, 2> key{};

    explicit Philox4x32(std::uint64_t seed)
        : key{static_cast<std::uint32_t>(seed),
              static_cast<std::uint32_t>(seed >> 32)} {}

    std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter) const;
};

inline std::array<std::uint32_t, 4> make_counter(std::uint64_t a, std::uint64_t b) {
    return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
            static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
}

/// Uniform double in (0, 1] from 64 random bits (53-bit resolution; never 0,
/// so it is safe under log()).
inline double uniform_open01(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t u = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>((u >> 11) + 1) * 0x1.0p-53;
}

/// Two independent N(0,1) draws from the counter (a, b) via Box-Muller.
std::pair<double, double> normal_pair(const Philox4x32& gen, std::uint64_t a,
                                      std::uint64_t b);

/// First component of normal_pair.
double normal(const Philox4x32& gen, std::uint64_t a, std::uint64_t b);

}  // namespace rytov::rng
