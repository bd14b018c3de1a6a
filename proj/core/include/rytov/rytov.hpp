#pragma once

#include <functional>
#include <span>
#include <utility>

#include "rytov/greens.hpp"
#include "rytov/turbulence.hpp"

namespace rytov {

/// Constant in front of the white-noise second-moment exponent.
/// Gaussian applies the moment identity E(e^X) = e^(E(X^2)/2) of a centered
/// Gaussian functional; Paper reproduces the printed exponents, which carry
/// twice that coefficient.
enum class Convention { Gaussian, Paper };

inline double convention_coefficient(Convention c) {
    return c == Convention::Paper ? 4.0 : 2.0;
}

/// Unperturbed background field entering the first-order log-perturbation.
struct BackgroundField {
    enum class Kind { PlaneWave, BeamWave, PointSource };

    Kind kind = Kind::PlaneWave;
    WaveParams wave;
    double alpha = 0.0;   // beam parameter, 1/meters (BeamWave only)
    Point3 source{};      // PointSource only

    static BackgroundField plane_wave(const WaveParams& wave);
    static BackgroundField beam_wave(const WaveParams& wave, double alpha);
    static BackgroundField point_source(const WaveParams& wave, const Point3& source);

    cplx u0(const Point3& p) const;
    cplx v0(const ParaxialCoords& p) const;  // u0 with e^(i k0 x) removed
};

/// First-order log-perturbation value plus quadrature diagnostics.
struct LogPerturbation {
    cplx value{0.0, 0.0};
    double excluded_volume = 0.0;
    std::size_t retained_nodes = 0;
};

struct TurbulentGreens {
    cplx value{0.0, 0.0};
    cplx exponent{0.0, 0.0};  // value = free-space kernel * exp(exponent)
    double delta = 0.0;
};

/// Perturbed field of the full Helmholtz pipeline:
/// Phi1(r) = k0^2 / (2 pi u0(r)) * integral of u0 n1 e^(i k0 |r-r'|)/|r-r'|.
LogPerturbation phi1_full(const Point3& r, const BackgroundField& background,
                          const RefractiveFieldRealization& field,
                          const QuadratureGrid& grid);

/// Turbulent Green's function G = g0 * exp(delta * integral of 2 k0^2 n1 K),
/// quadrature excludes balls around both endpoints.
TurbulentGreens turbulent_green(const Point3& r, const Point3& xi, double delta,
                                const RefractiveFieldRealization& field,
                                const QuadratureGrid& grid, const WaveParams& wave);

/// White-noise ensemble mean of turbulent_green:
/// g0 * exp(c * delta^2 sigma^2 k0^4 * integral of K^2), c = 2 (Gaussian) or
/// 4 (Paper). Uses the spec's field grid so the closure matches the
/// discretized white noise exactly.
cplx mean_turbulent_green(const Point3& r, const Point3& xi,
                          const TurbulenceSpec& spec, const WaveParams& wave,
                          Convention convention);

/// Paraxial perturbed field Phi1 = 2 k0^2 / v0(obs) * integral of v0 n1 gp.
LogPerturbation phi1_parabolic(const ParaxialCoords& obs,
                               const BackgroundField& background,
                               const RefractiveFieldRealization& field,
                               const QuadratureGrid& grid, const WaveParams& wave);

/// Gaussian beam u0(x, rho) = e^(i k0 x)/(1 + i x alpha)
/// * exp(-alpha k0 rho^2 / (2 (1 + i x alpha))).
cplx beam_field(const ParaxialCoords& obs, double alpha, const WaveParams& wave);

/// Paraxial turbulent Green's function G' = gp * exp(delta * integral of
/// 2 k0^2 n1 K'), cells strictly between the source and observation planes.
TurbulentGreens parabolic_turbulent_green(const ParaxialCoords& obs,
                                          const ParaxialCoords& src, double delta,
                                          const RefractiveFieldRealization& field,
                                          const QuadratureGrid& grid,
                                          const WaveParams& wave);

using GreensEvaluator = std::function<cplx(const Point3&, const Point3&)>;

GreensEvaluator free_space_evaluator(const WaveParams& wave);

/// Evaluator bound to one frozen realization; both legs of a time-reversal
/// experiment see the same medium.
GreensEvaluator turbulent_evaluator(double delta, RefractiveFieldRealization field,
                                    const WaveParams& wave);

/// max over pairs of |G(a,b) - G(b,a)| / |G(a,b)|.
double reciprocity_defect(const GreensEvaluator& G,
                          std::span<const std::pair<Point3, Point3>> pairs);

}  // namespace rytov
