#include "rytov/apodization.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "rytov/parallel.hpp"

namespace rytov {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

using MatrixXcd = Eigen::MatrixXcd;
using MatrixXd = Eigen::MatrixXd;

Eigen::Map<const MatrixXcd> as_matrix(const KernelMatrix& m) {
    return {m.sym.data(), static_cast<Eigen::Index>(m.n), static_cast<Eigen::Index>(m.n)};
}

/// Focused plane-to-plane propagator between pupil node x and image-plane
/// point xi.
cplx foc_kernel(const ApodizationProblem& pb, const TransversePoint& x,
                const TransversePoint& xi) {
    const double k0 = pb.wave.wavenumber;
    return std::polar(1.0 / (kFourPi * pb.distance), -k0 * dot(x, xi) / pb.distance);
}

/// Slab integral of K[(0,x),(z,xi),zeta]^2 with both endpoints excluded.
cplx exponent_integral(const ApodizationProblem& pb, const TransversePoint& x,
                       const TransversePoint& xi) {
    const Point3 p{0.0, x.y, x.z};
    const Point3 q{pb.distance, xi.y, xi.z};
    const Point3 singular[2] = {p, q};
    return integrate(
               *pb.slab,
               [&](const Point3& zeta) {
                   const cplx k = kernel_K(p, q, zeta, pb.wave);
                   return k * k;
               },
               singular)
        .value;
}

double exponent_scale(const ApodizationProblem& pb) {
    const double k0 = pb.wave.wavenumber;
    return convention_coefficient(pb.convention) * pb.delta * pb.delta * pb.sigma *
           pb.sigma * k0 * k0 * k0 * k0;
}

/// J(p, i) = slab integral for (pupil node p, image node i). Values are
/// computed on the first half of the pupil nodes and mirrored onto the
/// negated half, so the matrix satisfies J(-x, -xi) = J(x, xi) exactly and
/// the assembled operators commute with the node negation at the bit level.
MatrixXcd exponent_table(const ApodizationProblem& pb, const DiskGrid& image) {
    const std::size_t np = pb.pupil.size();
    const std::size_t ni = image.size();
    MatrixXcd J(np, ni);
    const std::size_t half = np / 2;
    detail::parallel_for(half * ni, [&](std::size_t idx) {
        const std::size_t p = idx / ni;
        const std::size_t i = idx % ni;
        J(p, i) = exponent_integral(pb, pb.pupil.nodes[p], image.nodes[i]);
    });
    for (std::size_t p = 0; p < half; ++p) {
        for (std::size_t i = 0; i < ni; ++i) {
            J(p + half, image.negation_index(i)) = J(p, i);
        }
    }
    return J;
}

void phase_fix(Eigen::VectorXcd& v) {
    Eigen::Index lead = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > best + 1e-14) {
            best = std::abs(v[i]);
            lead = i;
        }
    }
    if (best > 0.0) v *= std::conj(v[lead]) / std::abs(v[lead]);
}

Parity tag_parity(const DiskGrid& grid, const std::vector<cplx>& psi, double& defect) {
    double even2 = 0.0, odd2 = 0.0, tot2 = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const cplx mirrored = psi[grid.negation_index(i)];
        even2 += std::norm(psi[i] - mirrored);
        odd2 += std::norm(psi[i] + mirrored);
        tot2 += std::norm(psi[i]);
    }
    const double ed = std::sqrt(even2 / tot2);
    const double od = std::sqrt(odd2 / tot2);
    if (ed <= od) {
        defect = ed;
        return ed < 1e-6 ? Parity::Even : Parity::Mixed;
    }
    defect = od;
    return od < 1e-6 ? Parity::Odd : Parity::Mixed;
}

}  // namespace

DiskGrid DiskGrid::build(double radius, int n_radial, int n_angular) {
    if (!(radius > 0.0)) throw std::invalid_argument("DiskGrid: radius must be > 0");
    if (n_radial < 1) throw std::invalid_argument("DiskGrid: need at least 1 radial node");
    if (n_angular < 2 || n_angular % 2 != 0) {
        throw std::invalid_argument("DiskGrid: angular count must be even (parity pairing)");
    }
    DiskGrid g;
    g.radius = radius;
    g.n_radial = n_radial;
    g.n_angular = n_angular;

    std::vector<double> u, wu;
    gauss_legendre(n_radial, 0.0, radius * radius, u, wu);
    const int half = n_angular / 2;
    const double dphi = 2.0 * std::numbers::pi / n_angular;
    // dA = r dr dphi = du dphi / 2. The second half of the nodes is the exact
    // negation of the first half.
    for (int q = 0; q < n_radial; ++q) {
        const double r = std::sqrt(u[q]);
        for (int j = 0; j < half; ++j) {
            const double phi = (j + 0.5) * dphi;
            g.nodes.push_back({r * std::cos(phi), r * std::sin(phi)});
            g.weights.push_back(wu[q] * dphi * 0.5);
        }
    }
    const std::size_t nhalf = g.nodes.size();
    for (std::size_t i = 0; i < nhalf; ++i) {
        g.nodes.push_back(-g.nodes[i]);
        g.weights.push_back(g.weights[i]);
    }
    return g;
}

std::shared_ptr<const QuadratureGrid> make_slab_grid(double z, double halfwidth,
                                                     const std::array<int, 3>& counts) {
    if (!(z > 0.0) || !(halfwidth > 0.0)) {
        throw std::invalid_argument("make_slab_grid: extents must be positive");
    }
    return std::make_shared<QuadratureGrid>(build_grid(
        {{{0.0, z}, {-halfwidth, halfwidth}, {-halfwidth, halfwidth}}}, counts,
        QuadRule::Midpoint));
}

ApodizationProblem ApodizationProblem::make(double a, double b, double z,
                                            const WaveParams& wave, int pupil_nr,
                                            int pupil_nphi, int image_nr, int image_nphi,
                                            double delta, double sigma,
                                            Convention convention,
                                            std::shared_ptr<const QuadratureGrid> slab) {
    if (!(a > 0.0 && b > 0.0 && z > 0.0)) {
        throw std::invalid_argument("ApodizationProblem: a, b, z must be > 0");
    }
    if (delta < 0.0 || sigma < 0.0) {
        throw std::invalid_argument("ApodizationProblem: delta, sigma must be >= 0");
    }
    ApodizationProblem pb;
    pb.pupil_radius = a;
    pb.image_radius = b;
    pb.distance = z;
    pb.wave = wave;
    pb.delta = delta;
    pb.sigma = sigma;
    pb.convention = convention;
    pb.pupil = DiskGrid::build(a, pupil_nr, pupil_nphi);
    pb.image = DiskGrid::build(b, image_nr, image_nphi);
    pb.slab = std::move(slab);
    if (pb.random() && !pb.slab) {
        throw std::invalid_argument("ApodizationProblem: turbulent problem needs a slab grid");
    }
    return pb;
}

cplx image_amplitude(const ApodizationProblem& problem, const PupilAmplitude& T,
                     const TransversePoint& xi, bool mean,
                     const RefractiveFieldRealization* realization) {
    if (T.size() != problem.pupil.size()) {
        throw std::invalid_argument("image_amplitude: amplitude size mismatch");
    }
    const double scale = exponent_scale(problem);
    cplx acc{0.0, 0.0};
    for (std::size_t p = 0; p < problem.pupil.size(); ++p) {
        cplx factor{1.0, 0.0};
        if (problem.random()) {
            if (mean) {
                factor = std::exp(scale * exponent_integral(problem, problem.pupil.nodes[p], xi));
            } else {
                if (!realization) {
                    throw std::invalid_argument("image_amplitude: realization required");
                }
                const Point3 a{0.0, problem.pupil.nodes[p].y, problem.pupil.nodes[p].z};
                const Point3 b{problem.distance, xi.y, xi.z};
                const auto G =
                    turbulent_green(a, b, problem.delta, *realization, *problem.slab,
                                    problem.wave);
                factor = std::exp(G.exponent);
            }
        }
        acc += problem.pupil.weights[p] * T[p] *
               foc_kernel(problem, problem.pupil.nodes[p], xi) * factor;
    }
    return acc;
}

KernelMatrix build_Ks(const ApodizationProblem& problem) {
    const std::size_t np = problem.pupil.size();
    const std::size_t ni = problem.image.size();

    MatrixXcd B(np, ni);
    MatrixXcd J;
    const double scale = exponent_scale(problem);
    if (problem.random()) J = exponent_table(problem, problem.image);
    for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t i = 0; i < ni; ++i) {
            cplx v = foc_kernel(problem, problem.pupil.nodes[p], problem.image.nodes[i]);
            if (problem.random()) v *= std::exp(scale * J(p, i));
            B(p, i) = std::sqrt(problem.pupil.weights[p]) * v *
                      std::sqrt(problem.image.weights[i]);
        }
    }

    KernelMatrix out;
    out.n = np;
    out.weights = problem.pupil.weights;
    out.sym.resize(np * np);
    Eigen::Map<MatrixXcd> A(out.sym.data(), np, np);
    A.noalias() = B * B.adjoint();

    double defect = 0.0;
    for (std::size_t c = 0; c < np; ++c) {
        for (std::size_t r = 0; r <= c; ++r) {
            defect = std::max(defect, std::abs(A(r, c) - std::conj(A(c, r))));
        }
    }
    out.hermitian_defect = defect;
    for (const auto& v : out.sym) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw std::runtime_error("build_Ks: non-finite kernel entry");
        }
    }
    return out;
}

EigenResult solve_concentration(const ApodizationProblem& problem,
                                const KernelMatrix& matrix) {
    if (matrix.n == 0) throw std::invalid_argument("solve_concentration: empty matrix");
    const auto A = as_matrix(matrix);
    const double scale_ref = A.diagonal().real().maxCoeff();
    if (matrix.hermitian_defect > 1e-10 * std::max(scale_ref, 1e-300)) {
        throw std::invalid_argument("solve_concentration: matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(A);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("solve_concentration: eigensolver failed");
    }
    const auto& vals = es.eigenvalues();
    const Eigen::Index top = vals.size() - 1;
    const double lambda = vals[top];
    if (!(lambda > 0.0) || lambda > 1.0 + 1e-12) {
        throw std::runtime_error("solve_concentration: lambda' outside (0, 1]");
    }

    int degeneracy = 1;
    for (Eigen::Index i = top - 1; i >= 0; --i) {
        if (lambda - vals[i] <= 1e-12 * std::abs(lambda)) ++degeneracy; else break;
    }
    // Deterministic representative of a (possibly degenerate) top eigenspace:
    // phase-fix each candidate and keep the lexicographically largest.
    Eigen::VectorXcd best;
    for (int d = 0; d < degeneracy; ++d) {
        Eigen::VectorXcd v = es.eigenvectors().col(top - d);
        phase_fix(v);
        if (d == 0) {
            best = v;
            continue;
        }
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const auto a = v[i], b = best[i];
            if (a.real() != b.real()) {
                if (a.real() > b.real()) best = v;
                break;
            }
            if (a.imag() != b.imag()) {
                if (a.imag() > b.imag()) best = v;
                break;
            }
        }
    }

    EigenResult out;
    out.lambda_prime = lambda;
    out.alpha = std::sqrt(lambda);
    out.degeneracy = degeneracy;
    out.psi.resize(matrix.n);
    for (std::size_t i = 0; i < matrix.n; ++i) {
        out.psi[i] = best[static_cast<Eigen::Index>(i)] / std::sqrt(matrix.weights[i]);
    }
    out.parity = tag_parity(problem.pupil, out.psi, out.parity_defect);
    return out;
}

std::vector<EigenResult> solve_alpha(const ApodizationProblem& problem) {
    const double a = problem.pupil_radius;
    if (std::abs(a - problem.image_radius) > 1e-12 * a) {
        throw std::invalid_argument("solve_alpha: requires a = b");
    }
    const DiskGrid& grid = problem.pupil;
    const std::size_t n = grid.size();
    const std::size_t half = n / 2;

    MatrixXcd J;
    const double scale = exponent_scale(problem);
    if (problem.random()) J = exponent_table(problem, grid);

    MatrixXcd C(n, n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            cplx v = foc_kernel(problem, grid.nodes[p], grid.nodes[q]);
            if (problem.random()) v *= std::exp(scale * J(p, q));
            C(p, q) = std::sqrt(grid.weights[p]) * v * std::sqrt(grid.weights[q]);
        }
    }

    // The kernel commutes with x -> -x, so the pair basis
    // (e_j +- e_{j+half})/sqrt(2) splits C exactly into even/odd blocks.
    MatrixXcd Ce(half, half), Co(half, half);
    for (std::size_t p = 0; p < half; ++p) {
        for (std::size_t q = 0; q < half; ++q) {
            Ce(p, q) = C(p, q) + C(p, q + half);
            Co(p, q) = C(p, q) - C(p, q + half);
        }
    }

    std::vector<EigenResult> results;
    results.reserve(n);
    auto solve_block = [&](const MatrixXcd& block, Parity parity) {
        const double max_imag = block.imag().cwiseAbs().maxCoeff();
        const double max_real = block.real().cwiseAbs().maxCoeff();
        std::vector<std::pair<cplx, Eigen::VectorXcd>> pairs;
        if (max_imag == 0.0) {
            // Purely real symmetric block: eigenvalues exactly real.
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(block.real());
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
                pairs.emplace_back(cplx{es.eigenvalues()[i], 0.0},
                                   es.eigenvectors().col(i).cast<cplx>());
            }
        } else if (max_real == 0.0) {
            // Purely imaginary symmetric block: eigenvalues exactly imaginary.
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(block.imag());
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
                pairs.emplace_back(cplx{0.0, es.eigenvalues()[i]},
                                   es.eigenvectors().col(i).cast<cplx>());
            }
        } else {
            Eigen::ComplexEigenSolver<MatrixXcd> es(block);
            if (es.info() != Eigen::Success) {
                throw std::runtime_error("solve_alpha: eigensolver failed");
            }
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
                pairs.emplace_back(es.eigenvalues()[i], es.eigenvectors().col(i));
            }
        }
        for (auto& [alpha, vec] : pairs) {
            phase_fix(vec);
            EigenResult r;
            r.alpha = alpha;
            r.lambda_prime = std::norm(alpha);
            r.parity = parity;
            r.parity_defect = 0.0;
            r.psi.assign(n, cplx{0.0, 0.0});
            const double s = parity == Parity::Even ? 1.0 : -1.0;
            for (std::size_t j = 0; j < half; ++j) {
                const cplx component = vec[static_cast<Eigen::Index>(j)] / std::numbers::sqrt2;
                r.psi[j] = component / std::sqrt(grid.weights[j]);
                r.psi[j + half] = s * component / std::sqrt(grid.weights[j + half]);
            }
            results.push_back(std::move(r));
        }
    };
    solve_block(Ce, Parity::Even);
    solve_block(Co, Parity::Odd);

    std::sort(results.begin(), results.end(), [](const EigenResult& x, const EigenResult& y) {
        return std::abs(x.alpha) > std::abs(y.alpha);
    });
    return results;
}

std::vector<double> concentration_spectrum(const KernelMatrix& matrix) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(as_matrix(matrix),
                                                Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("concentration_spectrum: eigensolver failed");
    }
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

double energy_ratio(const KernelMatrix& matrix, const PupilAmplitude& T) {
    if (T.size() != matrix.n) throw std::invalid_argument("energy_ratio: size mismatch");
    Eigen::VectorXcd phi(static_cast<Eigen::Index>(matrix.n));
    for (std::size_t i = 0; i < matrix.n; ++i) {
        phi[static_cast<Eigen::Index>(i)] = std::sqrt(matrix.weights[i]) * T[i];
    }
    const double denom = phi.squaredNorm();
    if (denom == 0.0) throw std::invalid_argument("energy_ratio: amplitude is identically zero");
    const auto A = as_matrix(matrix);
    return (phi.adjoint() * (A * phi)).real()(0, 0) / denom;
}

double energy_ratio(const ApodizationProblem& problem, const PupilAmplitude& T) {
    return energy_ratio(build_Ks(problem), T);
}

double power_iteration_lambda_max(const KernelMatrix& matrix, double tol, int max_iter) {
    const auto A = as_matrix(matrix);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(matrix.n));
    for (std::size_t i = 0; i < matrix.n; ++i) {
        v[static_cast<Eigen::Index>(i)] = cplx{1.0 + static_cast<double>(i) / matrix.n, 0.0};
    }
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd w = A * v;
        const double next = (v.adjoint() * w).real()(0, 0);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

double cross_term_diagnostic(const ApodizationProblem& problem) {
    if (!problem.random()) return 0.0;
    const double scale = exponent_scale(problem);
    const std::size_t np = problem.pupil.size();
    const std::size_t ni = problem.image.size();
    const std::size_t px[2] = {0, np / 2};
    const std::size_t ix[2] = {0, ni / 2};
    double worst = 0.0;
    for (std::size_t xp : px) {
        for (std::size_t yp : px) {
            for (std::size_t ip : ix) {
                const Point3 x3{0.0, problem.pupil.nodes[xp].y, problem.pupil.nodes[xp].z};
                const Point3 y3{0.0, problem.pupil.nodes[yp].y, problem.pupil.nodes[yp].z};
                const Point3 q{problem.distance, problem.image.nodes[ip].y,
                               problem.image.nodes[ip].z};
                const Point3 singular[3] = {x3, y3, q};
                const cplx cross = integrate(
                                       *problem.slab,
                                       [&](const Point3& zeta) {
                                           return kernel_K(x3, q, zeta, problem.wave) *
                                                  std::conj(kernel_K(y3, q, zeta, problem.wave));
                                       },
                                       singular)
                                       .value;
                worst = std::max(worst, std::abs(2.0 * scale * cross));
            }
        }
    }
    return worst;
}

}  // namespace rytov
