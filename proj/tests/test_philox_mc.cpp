#include <gtest/gtest.h>

#include <cmath>

#include "rytov/montecarlo.hpp"
#include "rytov/parallel.hpp"
#include "rytov/philox.hpp"

using namespace rytov;
using rytov::rng::Philox4x32;

// Known-answer vectors from the Random123 distribution (philox4x32, 10
// rounds): pinning these makes the stream a portable contract.
TEST(Philox, KnownAnswerZeros) {
    Philox4x32 gen(0);
    const auto out = gen.block({0u, 0u, 0u, 0u});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
    Philox4x32 gen(0xffffffffffffffffull);
    const auto out = gen.block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
    Philox4x32 gen((static_cast<std::uint64_t>(0x299f31d0u) << 32) | 0xa4093822u);
    const auto out = gen.block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Philox, UniformRangeAndDeterminism) {
    Philox4x32 gen(1234);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const auto [a, b] = rng::normal_pair(gen, i, 7);
        EXPECT_TRUE(std::isfinite(a));
        EXPECT_TRUE(std::isfinite(b));
    }
    EXPECT_EQ(rng::normal(gen, 5, 9), rng::normal(gen, 5, 9));
    EXPECT_NE(rng::normal(gen, 5, 9), rng::normal(gen, 6, 9));
    const double u = rng::uniform_open01(0, 0);
    EXPECT_GT(u, 0.0);
    EXPECT_LE(rng::uniform_open01(0xffffffffu, 0xffffffffu), 1.0);
}

TEST(McMean, ConstantStatistic) {
    const MonteCarloSpec spec{100, 7};
    const cplx c{2.5, -1.25};
    const auto res = mc_mean(
        spec, [](std::uint64_t i) { return i; }, [&](std::uint64_t) { return c; });
    EXPECT_EQ(res.mean, c);
    EXPECT_EQ(res.standard_error, 0.0);
}

TEST(McMean, DeterministicUnderSeed) {
    const MonteCarloSpec spec{500, 42};
    auto draw = [&](std::uint64_t i) {
        Philox4x32 gen(spec.seed);
        return cplx{rng::normal(gen, i, 0), rng::normal(gen, i, 1)};
    };
    auto ident = [](cplx v) { return v; };
    const auto a = mc_mean(spec, draw, ident);
    const auto b = mc_mean(spec, draw, ident);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(McMean, IndependentOfWorkerCount) {
    const MonteCarloSpec spec{5000, 9};
    auto draw = [&](std::uint64_t i) {
        Philox4x32 gen(spec.seed);
        return cplx{rng::normal(gen, i, 0), 0.0};
    };
    auto ident = [](cplx v) { return v; };
    set_thread_count(1);
    const auto serial = mc_mean(spec, draw, ident);
    set_thread_count(4);
    const auto parallel = mc_mean(spec, draw, ident);
    set_thread_count(1);
    EXPECT_EQ(serial.mean, parallel.mean);
    EXPECT_EQ(serial.standard_error, parallel.standard_error);
}

TEST(McMean, NormalDrawWithinThreeSigma) {
    const MonteCarloSpec spec{10000, 2024};
    Philox4x32 gen(spec.seed);
    const auto res = mc_mean(
        spec, [&](std::uint64_t i) { return rng::normal(gen, i, 0); },
        [](double v) { return cplx{v, 0.0}; });
    EXPECT_LT(std::abs(res.mean), 3.0 * res.standard_error);
    EXPECT_NEAR(res.standard_error, 1.0 / 100.0, 0.1 / 100.0);
}

TEST(McMean, StandardErrorScaling) {
    Philox4x32 gen(77);
    auto run = [&](std::uint64_t n) {
        return mc_mean(
            MonteCarloSpec{n, 77},
            [&](std::uint64_t i) { return rng::normal(gen, i, 3); },
            [](double v) { return cplx{v, 0.0}; });
    };
    const auto small = run(100);
    const auto large = run(10000);
    const double ratio = small.standard_error / large.standard_error;
    EXPECT_GT(ratio, 5.0);   // 1/sqrt(N) predicts 10, allow factor 2
    EXPECT_LT(ratio, 20.0);
}

TEST(McMean, RejectsSingleSample) {
    EXPECT_THROW(mc_mean(
                     MonteCarloSpec{1, 0}, [](std::uint64_t i) { return i; },
                     [](std::uint64_t) {
                         return cplx{1.0, 0.0};
                     }),
                 std::invalid_argument);
}
