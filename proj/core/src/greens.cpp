#include "rytov/greens.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rytov {

namespace {
constexpr double kFourPi = 4.0 * std::numbers::pi;
}

cplx g0(const Point3& r, const Point3& xi, const WaveParams& wave) {
    const double d = distance(r, xi);
    if (d == 0.0) throw std::domain_error("g0: coincident source and observation");
    return std::polar(1.0 / (kFourPi * d), wave.wavenumber * d);
}

std::vector<double> radiation_defect(const Point3& xi, const WaveParams& wave,
                                     std::span<const double> radii) {
    std::vector<double> out;
    out.reserve(radii.size());
    const Point3 dir{1.0, 0.0, 0.0};
    for (double r : radii) {
        if (!(r > 0.0)) throw std::invalid_argument("radiation_defect: radii must be > 0");
        const Point3 p = xi + r * dir;
        const cplx g = g0(p, xi, wave);
        // dG/dr = (i k0 - 1/r) G for the outgoing spherical wave.
        const cplx dg = (cplx{0.0, wave.wavenumber} - cplx{1.0 / r, 0.0}) * g;
        out.push_back(std::abs(r * (dg - cplx{0.0, wave.wavenumber} * g)));
    }
    return out;
}

cplx helmholtz_residual(const ScalarField& field, const IndexField& n,
                        const WaveParams& wave, const Point3& probe, double h,
                        std::span<const Point3> singularities) {
    if (!(h > 0.0)) throw std::invalid_argument("helmholtz_residual: h must be > 0");
    for (const auto& s : singularities) {
        if (distance(probe, s) <= 3.0 * h) {
            throw std::domain_error("helmholtz_residual: probe too near a singularity");
        }
    }
    const cplx u0 = field(probe);
    cplx lap{0.0, 0.0};
    const Point3 steps[3] = {{h, 0, 0}, {0, h, 0}, {0, 0, h}};
    for (const auto& s : steps) {
        lap += field(probe + s) + field(probe - s) - 2.0 * u0;
    }
    lap /= h * h;
    const double nn = n(probe);
    return lap + wave.wavenumber * wave.wavenumber * nn * nn * u0;
}

cplx paraxial_residual(const ParaxialField& field, const WaveParams& wave,
                       const ParaxialCoords& probe, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("paraxial_residual: h must be > 0");
    auto at = [&](double dx, double dy, double dz) {
        return field({probe.x + dx, {probe.rho.y + dy, probe.rho.z + dz}});
    };
    const cplx u0 = at(0, 0, 0);
    const cplx dvdx = (at(h, 0, 0) - at(-h, 0, 0)) / (2.0 * h);
    const cplx lap_rho =
        (at(0, h, 0) + at(0, -h, 0) + at(0, 0, h) + at(0, 0, -h) - 4.0 * u0) / (h * h);
    return cplx{0.0, 2.0 * wave.wavenumber} * dvdx + lap_rho;
}

cplx gp(const ParaxialCoords& obs, const ParaxialCoords& src, const WaveParams& wave) {
    const double dx = obs.x - src.x;
    if (!(dx > 0.0)) {
        throw std::domain_error("gp: propagation distance must be positive (obs.x > src.x)");
    }
    const double d2 = norm2(obs.rho - src.rho);
    return std::polar(1.0 / (kFourPi * dx), wave.wavenumber * d2 / (2.0 * dx));
}

cplx kernel_K(const Point3& r, const Point3& xi, const Point3& zeta,
              const WaveParams& wave) {
    return g0(zeta, xi, wave) * g0(r, zeta, wave) / g0(r, xi, wave);
}

cplx kernel_Kprime(const ParaxialCoords& obs, const ParaxialCoords& src,
                   const ParaxialCoords& mid, const WaveParams& wave) {
    if (!(src.x < mid.x && mid.x < obs.x)) {
        throw std::domain_error("kernel_Kprime: requires src.x < mid.x < obs.x");
    }
    return gp(mid, src, wave) * gp(obs, mid, wave) / gp(obs, src, wave);
}

}  // namespace rytov
