#include "rytov/philox.hpp"

#include <cmath>
#include <numbers>

namespace rytov::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> round_once(std::array<std::uint32_t, 4> c,
                                               const std::array<std::uint32_t, 2>& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> counter) const {
    std::array<std::uint32_t, 2> k = key;
    for (int r = 0; r < 9; ++r) {
        counter = round_once(counter, k);
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    return round_once(counter, k);
}

std::pair<double, double> normal_pair(const Philox4x32& gen, std::uint64_t a,
                                      std::uint64_t b) {
    const auto w = gen.block(make_counter(a, b));
    const double u1 = uniform_open01(w[0], w[1]);
    const double u2 = uniform_open01(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
}

double normal(const Philox4x32& gen, std::uint64_t a, std::uint64_t b) {
    return normal_pair(gen, a, b).first;
}

}  // namespace rytov::rng
