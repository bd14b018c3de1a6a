#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rytov/geometry.hpp"
#include "rytov/turbulence.hpp"

namespace rytov {

/// Point on the paraxial slab: axial position x plus transverse offset rho.
struct ParaxialCoords {
    double x = 0.0;
    TransversePoint rho{};
};

/// Outgoing spherical-wave kernel exp(i k0 |r - xi|) / (4 pi |r - xi|).
/// Symmetric in its arguments; at k0 = 0 it is the Poisson kernel.
cplx g0(const Point3& r, const Point3& xi, const WaveParams& wave);

/// |r (dG/dr - i k0 G)| of the spherical-wave kernel at each radius, using
/// the analytic radial derivative (i k0 - 1/r) G of the implemented kernel.
/// Outgoing waves decay like 1/(4 pi r) here.
std::vector<double> radiation_defect(const Point3& xi, const WaveParams& wave,
                                     std::span<const double> radii);

using ScalarField = std::function<cplx(const Point3&)>;
using IndexField = std::function<double(const Point3&)>;

/// Discrete residual of the Helmholtz operator: 7-point central-difference
/// Laplacian plus k0^2 n(probe)^2 u(probe). Second order in h for smooth
/// exact solutions. The probe must stay at distance > 3h from field
/// singularities; pass those in `singularities`.
cplx helmholtz_residual(const ScalarField& field, const IndexField& n,
                        const WaveParams& wave, const Point3& probe, double h,
                        std::span<const Point3> singularities = {});

using ParaxialField = std::function<cplx(const ParaxialCoords&)>;

/// Discrete residual of 2 i k0 dv/dx + Laplacian_rho v, central differences.
cplx paraxial_residual(const ParaxialField& field, const WaveParams& wave,
                       const ParaxialCoords& probe, double h);

/// Paraxial free-space kernel exp(i k0 |rho - theta|^2 / (2 (x - sigma)))
/// / (4 pi (x - sigma)), forward propagation only (obs.x > src.x).
cplx gp(const ParaxialCoords& obs, const ParaxialCoords& src, const WaveParams& wave);

/// Ratio kernel K(r, xi, zeta) = g0(zeta, xi) g0(r, zeta) / g0(r, xi);
/// symmetric in (r, xi) and singular as zeta approaches either.
cplx kernel_K(const Point3& r, const Point3& xi, const Point3& zeta,
              const WaveParams& wave);

/// Paraxial ratio kernel built from gp; requires src.x < mid.x < obs.x.
cplx kernel_Kprime(const ParaxialCoords& obs, const ParaxialCoords& src,
                   const ParaxialCoords& mid, const WaveParams& wave);

}  // namespace rytov
