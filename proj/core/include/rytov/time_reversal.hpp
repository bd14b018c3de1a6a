#pragma once

#include <span>
#include <vector>

#include "rytov/montecarlo.hpp"
#include "rytov/rytov.hpp"

namespace rytov {

/// Phase-conjugating mirror: the aperture indicator discretized into element
/// centers with area weights. Convention: the mirror sits in the plane x = 0.
struct MirrorElement {
    Point3 center{};
    double weight = 0.0;
};

struct MirrorSpec {
    std::vector<MirrorElement> elements;

    static MirrorSpec point(const Point3& p);
    /// ny x nz element grid in the x = 0 plane, centered on the origin,
    /// element weight = spacing^2.
    static MirrorSpec grid(int ny, int nz, double spacing);
    void validate() const;
};

struct SourceElement {
    Point3 position{};
    double weight = 0.0;
    cplx amplitude{0.0, 0.0};
};

/// Input field on the source plane at x = plane_x.
struct SourceField {
    double plane_x = 0.0;
    std::vector<SourceElement> elements;

    static SourceField point(const Point3& p, cplx amplitude = {1.0, 0.0});
    void validate() const;
};

struct RefocusResult {
    std::vector<Point3> points;
    std::vector<cplx> psi;          // Psi^B (or its ensemble mean)
    std::vector<double> intensity;  // |Psi^B|^2 (or the ensemble mean of it)
    // Populated by mc_refocus only:
    std::vector<double> se_psi;
    std::vector<double> se_intensity;
};

/// Field recorded at the mirror: per element m, sum over source elements of
/// G(r_m, r_s) Psi0(s) w_s.
std::vector<cplx> mirror_field(const SourceField& src, const MirrorSpec& mirror,
                               const GreensEvaluator& G);

/// Phase conjugation and back propagation of recorded mirror values:
/// Psi_B(r) = sum over m of w_m G(r, r_m) conj(psi_m). For a frozen-medium
/// experiment pass the same realization-bound evaluator used to record.
RefocusResult backpropagate(std::span<const cplx> psi_m, const MirrorSpec& mirror,
                            std::span<const Point3> eval_points,
                            const GreensEvaluator& G);

/// Analytic white-noise ensemble mean of Psi_B and of the intensity. The
/// quadratic-exponent closure is evaluated on the spec's field grid with the
/// same per-leg exclusion balls the single-realization path uses, so it is
/// the exact expectation of the discretized model.
RefocusResult mean_refocus(const SourceField& src, const MirrorSpec& mirror,
                           std::span<const Point3> eval_points,
                           const TurbulenceSpec& spec, const WaveParams& wave,
                           Convention convention);

/// Empirical ensemble mean over mc.samples independent realizations drawn
/// with seed mc.seed; per-point mean and standard error of Psi_B and I.
RefocusResult mc_refocus(const SourceField& src, const MirrorSpec& mirror,
                         std::span<const Point3> eval_points,
                         const TurbulenceSpec& spec, const WaveParams& wave,
                         const MonteCarloSpec& mc);

}  // namespace rytov
