#include "rytov/time_reversal.hpp"

#include <cmath>
#include <stdexcept>

namespace rytov {

MirrorSpec MirrorSpec::point(const Point3& p) { return {{{p, 1.0}}}; }

MirrorSpec MirrorSpec::grid(int ny, int nz, double spacing) {
    if (ny < 1 || nz < 1 || !(spacing > 0.0)) {
        throw std::invalid_argument("MirrorSpec::grid: bad element layout");
    }
    MirrorSpec m;
    for (int i = 0; i < ny; ++i) {
        for (int j = 0; j < nz; ++j) {
            const double y = (i - 0.5 * (ny - 1)) * spacing;
            const double z = (j - 0.5 * (nz - 1)) * spacing;
            m.elements.push_back({{0.0, y, z}, spacing * spacing});
        }
    }
    return m;
}

void MirrorSpec::validate() const {
    if (elements.empty()) throw std::invalid_argument("MirrorSpec: no elements");
    for (const auto& e : elements) {
        if (!(e.weight > 0.0)) throw std::invalid_argument("MirrorSpec: weights must be > 0");
    }
}

SourceField SourceField::point(const Point3& p, cplx amplitude) {
    SourceField s;
    s.plane_x = p.x;
    s.elements.push_back({p, 1.0, amplitude});
    return s;
}

void SourceField::validate() const {
    if (elements.empty()) throw std::invalid_argument("SourceField: no elements");
    for (const auto& e : elements) {
        if (!(e.weight > 0.0)) throw std::invalid_argument("SourceField: weights must be > 0");
        if (!std::isfinite(e.amplitude.real()) || !std::isfinite(e.amplitude.imag())) {
            throw std::invalid_argument("SourceField: non-finite amplitude");
        }
    }
}

std::vector<cplx> mirror_field(const SourceField& src, const MirrorSpec& mirror,
                               const GreensEvaluator& G) {
    src.validate();
    mirror.validate();
    for (const auto& m : mirror.elements) {
        for (const auto& s : src.elements) {
            if (m.center == s.position) {
                throw std::invalid_argument("mirror_field: coincident mirror/source points");
            }
        }
    }
    std::vector<cplx> psi_m(mirror.elements.size(), cplx{0.0, 0.0});
    for (std::size_t m = 0; m < mirror.elements.size(); ++m) {
        for (const auto& s : src.elements) {
            psi_m[m] += G(mirror.elements[m].center, s.position) * s.amplitude * s.weight;
        }
    }
    return psi_m;
}

RefocusResult backpropagate(std::span<const cplx> psi_m, const MirrorSpec& mirror,
                            std::span<const Point3> eval_points,
                            const GreensEvaluator& G) {
    mirror.validate();
    if (psi_m.size() != mirror.elements.size()) {
        throw std::invalid_argument("backpropagate: mirror value count mismatch");
    }
    RefocusResult out;
    out.points.assign(eval_points.begin(), eval_points.end());
    out.psi.reserve(eval_points.size());
    out.intensity.reserve(eval_points.size());
    for (const auto& r : eval_points) {
        for (const auto& m : mirror.elements) {
            if (r == m.center) {
                throw std::invalid_argument("backpropagate: evaluation point on a mirror element");
            }
        }
        cplx psi{0.0, 0.0};
        for (std::size_t m = 0; m < mirror.elements.size(); ++m) {
            psi += mirror.elements[m].weight * G(r, mirror.elements[m].center) *
                   std::conj(psi_m[m]);
        }
        out.psi.push_back(psi);
        out.intensity.push_back(std::norm(psi));
    }
    return out;
}

namespace {

// K values of one propagation leg on the field grid, scaled by sqrt(w) and
// zeroed inside the exclusion balls of the leg's endpoints. A dot product of
// two rows then integrates over exactly the cells both legs retain, which is
// the coupling the discretized white noise produces.
std::vector<cplx> leg_row(const Point3& a, const Point3& b,
                          const QuadratureGrid& grid, const WaveParams& wave) {
    std::vector<cplx> row(grid.size(), cplx{0.0, 0.0});
    const Point3 singular[2] = {a, b};
    for (std::size_t c = 0; c < grid.size(); ++c) {
        if (node_excluded(grid, grid.nodes[c], singular)) continue;
        row[c] = kernel_K(a, b, grid.nodes[c], wave) * std::sqrt(grid.weights[c]);
    }
    return row;
}

cplx dot_plain(const std::vector<cplx>& u, const std::vector<cplx>& v) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

cplx dot_mixed(const std::vector<cplx>& u, const std::vector<cplx>& v) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * std::conj(v[i]);
    return s;
}

}  // namespace

RefocusResult mean_refocus(const SourceField& src, const MirrorSpec& mirror,
                           std::span<const Point3> eval_points,
                           const TurbulenceSpec& spec, const WaveParams& wave,
                           Convention convention) {
    src.validate();
    mirror.validate();
    if (!spec.grid) throw std::invalid_argument("mean_refocus: spec has no grid");
    const QuadratureGrid& grid = *spec.grid;
    const double k0 = wave.wavenumber;
    const double scale = convention_coefficient(convention) * spec.delta * spec.delta *
                         spec.sigma * spec.sigma * k0 * k0 * k0 * k0;
    const bool random = scale != 0.0;
    const std::size_t M = mirror.elements.size();
    const std::size_t S = src.elements.size();

    // Mirror-to-source legs are independent of the evaluation point.
    std::vector<std::vector<cplx>> ms_row(random ? M * S : 0);
    std::vector<cplx> g_ms(M * S);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t s = 0; s < S; ++s) {
            g_ms[m * S + s] =
                g0(mirror.elements[m].center, src.elements[s].position, wave);
            if (random) {
                ms_row[m * S + s] = leg_row(mirror.elements[m].center,
                                            src.elements[s].position, grid, wave);
            }
        }
    }
    std::vector<cplx> ms_ms_plain(random ? M * S * M * S : 0);
    std::vector<cplx> ms_ms_mixed(random ? M * S * M * S : 0);
    if (random) {
        for (std::size_t i = 0; i < M * S; ++i) {
            for (std::size_t j = 0; j < M * S; ++j) {
                ms_ms_plain[i * M * S + j] = dot_plain(ms_row[i], ms_row[j]);
                ms_ms_mixed[i * M * S + j] = dot_mixed(ms_row[i], ms_row[j]);
            }
        }
    }

    RefocusResult out;
    out.points.assign(eval_points.begin(), eval_points.end());
    for (const auto& r : eval_points) {
        std::vector<std::vector<cplx>> rm_row(random ? M : 0);
        std::vector<cplx> g_rm(M);
        for (std::size_t m = 0; m < M; ++m) {
            g_rm[m] = g0(r, mirror.elements[m].center, wave);
            if (random) rm_row[m] = leg_row(r, mirror.elements[m].center, grid, wave);
        }
        std::vector<cplx> rr_plain(random ? M * M : 0), rr_mixed(random ? M * M : 0);
        std::vector<cplx> rm_ms_plain(random ? M * M * S : 0);
        std::vector<cplx> rm_ms_mixed(random ? M * M * S : 0);
        if (random) {
            for (std::size_t i = 0; i < M; ++i) {
                for (std::size_t j = 0; j < M; ++j) {
                    rr_plain[i * M + j] = dot_plain(rm_row[i], rm_row[j]);
                    rr_mixed[i * M + j] = dot_mixed(rm_row[i], rm_row[j]);
                }
                for (std::size_t j = 0; j < M * S; ++j) {
                    rm_ms_plain[i * M * S + j] = dot_plain(rm_row[i], ms_row[j]);
                    rm_ms_mixed[i * M * S + j] = dot_mixed(rm_row[i], ms_row[j]);
                }
            }
        }

        // E(Psi_B): exponent integral of (K_rm + conj K_ms)^2 per (m, s).
        cplx mean_psi{0.0, 0.0};
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t s = 0; s < S; ++s) {
                cplx term = mirror.elements[m].weight * src.elements[s].weight *
                            g_rm[m] * std::conj(g_ms[m * S + s]) *
                            std::conj(src.elements[s].amplitude);
                if (random) {
                    const std::size_t q = m * S + s;
                    const cplx quad = rr_plain[m * M + m] +
                                      2.0 * rm_ms_mixed[m * M * S + q] +
                                      std::conj(ms_ms_plain[q * M * S + q]);
                    term *= std::exp(scale * quad);
                }
                mean_psi += term;
            }
        }
        out.psi.push_back(mean_psi);

        // E(I): exponent integral of the squared sum of four leg kernels,
        // conjugation pattern of Psi_B * conj(Psi_B).
        cplx mean_i{0.0, 0.0};
        for (std::size_t m1 = 0; m1 < M; ++m1) {
            for (std::size_t s1 = 0; s1 < S; ++s1) {
                for (std::size_t m2 = 0; m2 < M; ++m2) {
                    for (std::size_t s2 = 0; s2 < S; ++s2) {
                        const std::size_t q1 = m1 * S + s1;
                        const std::size_t q2 = m2 * S + s2;
                        cplx term = mirror.elements[m1].weight * src.elements[s1].weight *
                                    mirror.elements[m2].weight * src.elements[s2].weight *
                                    g_rm[m1] * std::conj(g_ms[q1]) * std::conj(g_rm[m2]) *
                                    g_ms[q2] * std::conj(src.elements[s1].amplitude) *
                                    src.elements[s2].amplitude;
                        if (random) {
                            // Legs: a = (r,m1), b = conj (m1,s1), c = conj (r,m2),
                            // d = (m2,s2).
                            const cplx quad =
                                rr_plain[m1 * M + m1] +
                                std::conj(ms_ms_plain[q1 * M * S + q1]) +
                                std::conj(rr_plain[m2 * M + m2]) +
                                ms_ms_plain[q2 * M * S + q2] +
                                2.0 * (rm_ms_mixed[m1 * M * S + q1] +
                                       rr_mixed[m1 * M + m2] +
                                       rm_ms_plain[m1 * M * S + q2] +
                                       std::conj(rm_ms_plain[m2 * M * S + q1]) +
                                       std::conj(rm_ms_mixed[m2 * M * S + q2]) +
                                       std::conj(ms_ms_mixed[q1 * M * S + q2]));
                            term *= std::exp(scale * quad);
                        }
                        mean_i += term;
                    }
                }
            }
        }
        out.intensity.push_back(mean_i.real());
    }
    return out;
}

RefocusResult mc_refocus(const SourceField& src, const MirrorSpec& mirror,
                         std::span<const Point3> eval_points,
                         const TurbulenceSpec& spec, const WaveParams& wave,
                         const MonteCarloSpec& mc) {
    src.validate();
    mirror.validate();
    if (!spec.grid) throw std::invalid_argument("mc_refocus: spec has no grid");
    if (mc.samples < 2) throw std::invalid_argument("mc_refocus: need at least 2 samples");

    TurbulenceSpec local = spec;
    local.seed = mc.seed;

    const std::size_t P = eval_points.size();
    std::vector<cplx> sum_psi(P, cplx{0.0, 0.0});
    std::vector<double> sum_re2(P, 0.0), sum_im2(P, 0.0);
    std::vector<double> sum_i(P, 0.0), sum_i2(P, 0.0);

    for (std::uint64_t n = 0; n < mc.samples; ++n) {
        const auto field = sample_field(local, n);
        const auto G = turbulent_evaluator(local.delta, field, wave);
        const auto psi_m = mirror_field(src, mirror, G);
        const auto snapshot = backpropagate(psi_m, mirror, eval_points, G);
        for (std::size_t p = 0; p < P; ++p) {
            const cplx v = snapshot.psi[p];
            sum_psi[p] += v;
            sum_re2[p] += v.real() * v.real();
            sum_im2[p] += v.imag() * v.imag();
            sum_i[p] += snapshot.intensity[p];
            sum_i2[p] += snapshot.intensity[p] * snapshot.intensity[p];
        }
    }

    const double nn = static_cast<double>(mc.samples);
    RefocusResult out;
    out.points.assign(eval_points.begin(), eval_points.end());
    out.psi.resize(P);
    out.intensity.resize(P);
    out.se_psi.resize(P);
    out.se_intensity.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
        out.psi[p] = sum_psi[p] / nn;
        out.intensity[p] = sum_i[p] / nn;
        const double var_re =
            std::max(0.0, (sum_re2[p] - nn * out.psi[p].real() * out.psi[p].real()) / (nn - 1.0));
        const double var_im =
            std::max(0.0, (sum_im2[p] - nn * out.psi[p].imag() * out.psi[p].imag()) / (nn - 1.0));
        const double var_i =
            std::max(0.0, (sum_i2[p] - nn * out.intensity[p] * out.intensity[p]) / (nn - 1.0));
        out.se_psi[p] = std::sqrt(std::max(var_re, var_im) / nn);
        out.se_intensity[p] = std::sqrt(var_i / nn);
    }
    return out;
}

}  // namespace rytov
