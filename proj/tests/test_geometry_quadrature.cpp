#include <gtest/gtest.h>

#include <cmath>

#include "rytov/quadrature.hpp"

using namespace rytov;

namespace {

const std::array<Interval, 3> kUnitCube = {{{0, 1}, {0, 1}, {0, 1}}};

double weight_sum(const QuadratureGrid& g) {
    double s = 0.0;
    for (double w : g.weights) s += w;
    return s;
}

}  // namespace

TEST(Geometry, DistanceBasics) {
    const Point3 a{1.0, -2.0, 3.0};
    const Point3 b{-0.5, 0.25, 7.0};
    EXPECT_EQ(distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(distance(a, b), distance(b, a));
    EXPECT_GT(distance(a, b), 0.0);
}

TEST(BuildGrid, MidpointUnitCube2) {
    const auto g = build_grid(kUnitCube, {2, 2, 2}, QuadRule::Midpoint);
    ASSERT_EQ(g.size(), 8u);
    for (double w : g.weights) EXPECT_DOUBLE_EQ(w, 0.125);
    for (const auto& n : g.nodes) {
        EXPECT_TRUE(n.x == 0.25 || n.x == 0.75);
        EXPECT_GT(n.x, 0.0);
        EXPECT_LT(n.x, 1.0);
    }
}

TEST(BuildGrid, MidpointSingleCell) {
    const auto g = build_grid(kUnitCube, {1, 1, 1}, QuadRule::Midpoint);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_DOUBLE_EQ(g.weights[0], 1.0);
    EXPECT_DOUBLE_EQ(g.nodes[0].x, 0.5);
    EXPECT_DOUBLE_EQ(g.nodes[0].y, 0.5);
    EXPECT_DOUBLE_EQ(g.nodes[0].z, 0.5);
}

TEST(BuildGrid, GaussWeightSum) {
    const std::array<Interval, 3> box = {{{0, 2}, {0, 2}, {0, 2}}};
    const auto g = build_grid(box, {4, 4, 4}, QuadRule::GaussLegendre);
    EXPECT_NEAR(weight_sum(g), 8.0, 8.0 * 1e-12);
    for (double w : g.weights) EXPECT_GT(w, 0.0);
}

TEST(BuildGrid, WeightSumEqualsVolumeProperty) {
    const std::array<Interval, 3> box = {{{-1.0, 2.5}, {0.25, 0.75}, {-3.0, -1.0}}};
    for (auto rule : {QuadRule::Midpoint, QuadRule::GaussLegendre}) {
        for (int n : {1, 3, 7}) {
            const auto g = build_grid(box, {n, n + 1, n + 2}, rule);
            EXPECT_NEAR(weight_sum(g), g.volume(), std::abs(g.volume()) * 1e-12);
            for (double w : g.weights) EXPECT_GT(w, 0.0);
        }
    }
}

TEST(BuildGrid, RejectsBadInput) {
    EXPECT_THROW(build_grid({{{0, 0}, {0, 1}, {0, 1}}}, {1, 1, 1}, QuadRule::Midpoint),
                 std::invalid_argument);
    EXPECT_THROW(build_grid({{{1, 0}, {0, 1}, {0, 1}}}, {1, 1, 1}, QuadRule::Midpoint),
                 std::invalid_argument);
    EXPECT_THROW(build_grid(kUnitCube, {0, 1, 1}, QuadRule::Midpoint),
                 std::invalid_argument);
}

TEST(GaussLegendre, PolynomialExactness) {
    // 2-point rule integrates cubics exactly.
    const auto g = build_grid(kUnitCube, {2, 2, 2}, QuadRule::GaussLegendre);
    const auto res = integrate(g, [](const Point3& p) {
        return cplx{p.x * p.x * p.x * p.y * p.y * p.z, 0.0};
    });
    EXPECT_NEAR(res.value.real(), 1.0 / 24.0, 1e-14);
}

TEST(Integrate, ConstantOverUnitCube) {
    const auto g = build_grid(kUnitCube, {3, 3, 3}, QuadRule::Midpoint);
    const auto res = integrate(g, [](const Point3&) { return cplx{1.0, 0.0}; });
    EXPECT_NEAR(res.value.real(), 1.0, 1e-13);
    EXPECT_EQ(res.excluded_volume, 0.0);
    EXPECT_EQ(res.retained_nodes, 27u);
}

TEST(Integrate, LinearCoordinate) {
    for (auto rule : {QuadRule::Midpoint, QuadRule::GaussLegendre}) {
        const auto g = build_grid(kUnitCube, {4, 4, 4}, rule);
        const auto res = integrate(g, [](const Point3& p) { return cplx{p.x, 0.0}; });
        EXPECT_NEAR(res.value.real(), 0.5, 1e-13);
    }
}

TEST(Integrate, Linearity) {
    const auto g = build_grid(kUnitCube, {5, 5, 5}, QuadRule::GaussLegendre);
    auto f = [](const Point3& p) { return cplx{p.x * p.y, p.z}; };
    auto h = [](const Point3& p) { return cplx{std::sin(p.x), p.y * p.y}; };
    const cplx a{2.0, -1.0};
    const cplx b{-0.5, 3.0};
    const cplx combined =
        integrate(g, [&](const Point3& p) { return a * f(p) + b * h(p); }).value;
    const cplx split = a * integrate(g, f).value + b * integrate(g, h).value;
    EXPECT_NEAR(std::abs(combined - split), 0.0, 1e-12 * std::abs(split));
}

TEST(Integrate, SingularKernelConvergesUnderRefinement) {
    // Independent oracle: Richardson extrapolation of refined midpoint grids
    // for the integrable 1/|p - s| singularity at the cube center.
    const Point3 center{0.5, 0.5, 0.5};
    auto value_at = [&](int n) {
        const auto g = build_grid(kUnitCube, {n, n, n}, QuadRule::Midpoint);
        const Point3 singular[1] = {center};
        return integrate(
                   g,
                   [&](const Point3& p) {
                       return cplx{1.0 / distance(p, center), 0.0};
                   },
                   singular)
            .value.real();
    };
    const double i8 = value_at(8);
    const double i16 = value_at(16);
    const double i32 = value_at(32);
    ASSERT_TRUE(std::isfinite(i32));
    const double rate = (i8 - i16) / (i16 - i32);
    ASSERT_GT(rate, 1.2);  // refinement is contracting
    const double extrapolated = i32 + (i32 - i16) / (rate - 1.0);
    EXPECT_LT(std::abs(i32 - extrapolated), std::abs(i16 - extrapolated));
    EXPECT_LT(std::abs(i16 - extrapolated), std::abs(i8 - extrapolated));
    // Loose sanity band for the cube self-integral of 1/r (about 2.38).
    EXPECT_GT(extrapolated, 2.3);
    EXPECT_LT(extrapolated, 2.5);
}

TEST(Integrate, ExcludedVolumeVanishesUnderRefinement) {
    const Point3 center{0.5, 0.5, 0.5};
    double prev = 2.0;
    for (int n : {4, 8, 16, 32}) {
        const auto g = build_grid(kUnitCube, {n, n, n}, QuadRule::Midpoint);
        const Point3 singular[1] = {center};
        const auto res =
            integrate(g, [](const Point3&) { return cplx{1.0, 0.0}; }, singular);
        EXPECT_LT(res.excluded_volume, prev);
        prev = res.excluded_volume;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Integrate, NonFiniteIntegrandRejected) {
    const auto g = build_grid(kUnitCube, {2, 2, 2}, QuadRule::Midpoint);
    EXPECT_THROW(
        integrate(g, [](const Point3& p) { return cplx{1.0 / (p.x - 0.25), 0.0}; }),
        std::domain_error);
}

TEST(Integrate, ExclusionBallDropsNodes) {
    const auto g = build_grid(kUnitCube, {4, 4, 4}, QuadRule::Midpoint);
    const Point3 singular[1] = {{0.375, 0.375, 0.375}};  // on a node
    const auto res = integrate(g, [](const Point3&) { return cplx{1.0, 0.0}; }, singular);
    EXPECT_LT(res.retained_nodes, g.size());
    EXPECT_GT(res.excluded_volume, 0.0);
    EXPECT_NEAR(res.value.real() + res.excluded_volume, 1.0, 1e-13);
}
