#include "rytov/rytov.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rytov {

BackgroundField BackgroundField::plane_wave(const WaveParams& wave) {
    return {Kind::PlaneWave, wave, 0.0, {}};
}

BackgroundField BackgroundField::beam_wave(const WaveParams& wave, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("beam_wave: alpha must be > 0");
    return {Kind::BeamWave, wave, alpha, {}};
}

BackgroundField BackgroundField::point_source(const WaveParams& wave,
                                              const Point3& source) {
    return {Kind::PointSource, wave, 0.0, source};
}

cplx BackgroundField::u0(const Point3& p) const {
    switch (kind) {
        case Kind::PlaneWave:
            return std::polar(1.0, wave.wavenumber * p.x);
        case Kind::BeamWave:
            return beam_field({p.x, {p.y, p.z}}, alpha, wave);
        case Kind::PointSource:
            return g0(p, source, wave);
    }
    return {};
}

cplx BackgroundField::v0(const ParaxialCoords& p) const {
    switch (kind) {
        case Kind::PlaneWave:
            return {1.0, 0.0};
        case Kind::BeamWave:
            return beam_field(p, alpha, wave) * std::polar(1.0, -wave.wavenumber * p.x);
        case Kind::PointSource:
            throw std::invalid_argument("v0: point-source background has no paraxial form");
    }
    return {};
}

LogPerturbation phi1_full(const Point3& r, const BackgroundField& background,
                          const RefractiveFieldRealization& field,
                          const QuadratureGrid& grid) {
    if (field.values.size() != grid.size()) {
        throw std::invalid_argument("phi1_full: field does not match grid");
    }
    const cplx u0r = background.u0(r);
    if (u0r == cplx{0.0, 0.0}) {
        throw std::domain_error("phi1_full: background field vanishes at evaluation point");
    }
    const double k0 = background.wave.wavenumber;
    const Point3 singular[1] = {r};
    const auto res = integrate(
        grid,
        [&](std::size_t i, const Point3& p) {
            const double d = distance(r, p);
            return background.u0(p) * field.values[i] * std::polar(1.0 / d, k0 * d);
        },
        singular);
    LogPerturbation out;
    out.value = k0 * k0 / (2.0 * std::numbers::pi * u0r) * res.value;
    out.excluded_volume = res.excluded_volume;
    out.retained_nodes = res.retained_nodes;
    return out;
}

TurbulentGreens turbulent_green(const Point3& r, const Point3& xi, double delta,
                                const RefractiveFieldRealization& field,
                                const QuadratureGrid& grid, const WaveParams& wave) {
    if (r == xi) throw std::domain_error("turbulent_green: coincident points");
    if (field.values.size() != grid.size()) {
        throw std::invalid_argument("turbulent_green: field does not match grid");
    }
    const double k0 = wave.wavenumber;
    const Point3 singular[2] = {r, xi};
    const auto res = integrate(
        grid,
        [&](std::size_t i, const Point3& p) {
            return field.values[i] * kernel_K(r, xi, p, wave);
        },
        singular);
    TurbulentGreens out;
    out.delta = delta;
    out.exponent = delta * 2.0 * k0 * k0 * res.value;
    out.value = g0(r, xi, wave) * std::exp(out.exponent);
    return out;
}

cplx mean_turbulent_green(const Point3& r, const Point3& xi,
                          const TurbulenceSpec& spec, const WaveParams& wave,
                          Convention convention) {
    if (r == xi) throw std::domain_error("mean_turbulent_green: coincident points");
    if (!spec.grid) throw std::invalid_argument("mean_turbulent_green: spec has no grid");
    const double k0 = wave.wavenumber;
    const Point3 singular[2] = {r, xi};
    const auto k2 = integrate(
        *spec.grid,
        [&](const Point3& p) {
            const cplx k = kernel_K(r, xi, p, wave);
            return k * k;
        },
        singular);
    const double c = convention_coefficient(convention);
    const cplx exponent = c * spec.delta * spec.delta * spec.sigma * spec.sigma *
                          k0 * k0 * k0 * k0 * k2.value;
    return g0(r, xi, wave) * std::exp(exponent);
}

LogPerturbation phi1_parabolic(const ParaxialCoords& obs,
                               const BackgroundField& background,
                               const RefractiveFieldRealization& field,
                               const QuadratureGrid& grid, const WaveParams& wave) {
    if (field.values.size() != grid.size()) {
        throw std::invalid_argument("phi1_parabolic: field does not match grid");
    }
    const cplx v0obs = background.v0(obs);
    if (v0obs == cplx{0.0, 0.0}) {
        throw std::domain_error("phi1_parabolic: background field vanishes at evaluation point");
    }
    for (const auto& p : grid.nodes) {
        if (p.x >= obs.x) {
            throw std::domain_error("phi1_parabolic: field cell at or beyond the observation plane");
        }
    }
    const auto res = integrate(grid, [&](std::size_t i, const Point3& p) {
        const ParaxialCoords src{p.x, {p.y, p.z}};
        return background.v0(src) * field.values[i] * gp(obs, src, wave);
    });
    const double k0 = wave.wavenumber;
    LogPerturbation out;
    out.value = 2.0 * k0 * k0 / v0obs * res.value;
    out.excluded_volume = res.excluded_volume;
    out.retained_nodes = res.retained_nodes;
    return out;
}

cplx beam_field(const ParaxialCoords& obs, double alpha, const WaveParams& wave) {
    if (!(alpha > 0.0)) throw std::invalid_argument("beam_field: alpha must be > 0");
    const double k0 = wave.wavenumber;
    const cplx q{1.0, obs.x * alpha};
    return std::polar(1.0, k0 * obs.x) / q *
           std::exp(-alpha * k0 * norm2(obs.rho) / (2.0 * q));
}

TurbulentGreens parabolic_turbulent_green(const ParaxialCoords& obs,
                                          const ParaxialCoords& src, double delta,
                                          const RefractiveFieldRealization& field,
                                          const QuadratureGrid& grid,
                                          const WaveParams& wave) {
    if (field.values.size() != grid.size()) {
        throw std::invalid_argument("parabolic_turbulent_green: field does not match grid");
    }
    for (const auto& p : grid.nodes) {
        if (p.x <= src.x || p.x >= obs.x) {
            throw std::domain_error(
                "parabolic_turbulent_green: field cells must lie strictly between the planes");
        }
    }
    const double k0 = wave.wavenumber;
    const auto res = integrate(grid, [&](std::size_t i, const Point3& p) {
        return field.values[i] * kernel_Kprime(obs, src, {p.x, {p.y, p.z}}, wave);
    });
    TurbulentGreens out;
    out.delta = delta;
    out.exponent = delta * 2.0 * k0 * k0 * res.value;
    out.value = gp(obs, src, wave) * std::exp(out.exponent);
    return out;
}

GreensEvaluator free_space_evaluator(const WaveParams& wave) {
    return [wave](const Point3& a, const Point3& b) { return g0(a, b, wave); };
}

GreensEvaluator turbulent_evaluator(double delta, RefractiveFieldRealization field,
                                    const WaveParams& wave) {
    if (!field.grid) throw std::invalid_argument("turbulent_evaluator: field has no grid");
    auto grid = field.grid;
    return [delta, field = std::move(field), grid, wave](const Point3& a, const Point3& b) {
        return turbulent_green(a, b, delta, field, *grid, wave).value;
    };
}

double reciprocity_defect(const GreensEvaluator& G,
                          std::span<const std::pair<Point3, Point3>> pairs) {
    double worst = 0.0;
    for (const auto& [a, b] : pairs) {
        const cplx fwd = G(a, b);
        const cplx rev = G(b, a);
        worst = std::max(worst, std::abs(fwd - rev) / std::abs(fwd));
    }
    return worst;
}

}  // namespace rytov
