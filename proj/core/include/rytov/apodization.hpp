#pragma once

#include <memory>
#include <vector>

#include "rytov/rytov.hpp"

namespace rytov {

/// Quadrature over a disk of the given radius: Gauss-Legendre in radius^2
/// tensored with a uniform midpoint rule in angle. The angular count must be
/// even; node -x is then in the set for every node x, at index
/// negation_index(i), with the same weight. Weights sum to pi * radius^2.
struct DiskGrid {
    double radius = 0.0;
    int n_radial = 0;
    int n_angular = 0;
    std::vector<TransversePoint> nodes;
    std::vector<double> weights;

    static DiskGrid build(double radius, int n_radial, int n_angular);
    std::size_t size() const { return nodes.size(); }
    std::size_t negation_index(std::size_t i) const {
        const std::size_t half = nodes.size() / 2;
        return i < half ? i + half : i - half;
    }
};

/// Energy-concentration problem: pupil of radius a at x = 0, image circle of
/// radius b in the plane x = z. The plane-to-plane propagator is the focused
/// (Fraunhofer) kernel exp(-i k0 x.xi / z) / (4 pi z); the turbulence
/// exponent is the ratio-kernel integral over the slab between the planes and
/// is independent of that phase referencing.
struct ApodizationProblem {
    double pupil_radius = 0.0;
    double image_radius = 0.0;
    double distance = 0.0;
    WaveParams wave;
    double delta = 0.0;
    double sigma = 0.0;
    Convention convention = Convention::Gaussian;
    DiskGrid pupil;
    DiskGrid image;
    std::shared_ptr<const QuadratureGrid> slab;  // required when delta*sigma > 0

    static ApodizationProblem make(double a, double b, double z, const WaveParams& wave,
                                   int pupil_nr, int pupil_nphi, int image_nr,
                                   int image_nphi, double delta = 0.0, double sigma = 0.0,
                                   Convention convention = Convention::Gaussian,
                                   std::shared_ptr<const QuadratureGrid> slab = nullptr);
    bool random() const { return delta != 0.0 && sigma != 0.0; }
};

/// Midpoint grid over the slab [0, z] x [-halfwidth, halfwidth]^2 used for
/// the turbulence exponent integrals.
std::shared_ptr<const QuadratureGrid> make_slab_grid(double z, double halfwidth,
                                                     const std::array<int, 3>& counts);

using PupilAmplitude = std::vector<cplx>;

/// Nystrom-symmetrized concentration kernel W^(1/2) K_s W^(1/2) over pupil
/// nodes (column-major, Hermitian up to roundoff by Gram construction).
struct KernelMatrix {
    std::size_t n = 0;
    std::vector<cplx> sym;        // n x n, column-major
    std::vector<double> weights;  // pupil weights
    double hermitian_defect = 0.0;

    cplx entry(std::size_t row, std::size_t col) const { return sym[col * n + row]; }
};

enum class Parity { Even, Odd, Mixed };

struct EigenResult {
    double lambda_prime = 0.0;  // concentration ratio, in (0, 1]
    cplx alpha{0.0, 0.0};       // |alpha|^2 = lambda_prime
    std::vector<cplx> psi;      // eigenfunction on pupil nodes
    Parity parity = Parity::Mixed;
    double parity_defect = 0.0;
    int degeneracy = 1;
};

/// Image-plane amplitude A(xi) of the pupil amplitude T. With mean = true the
/// deterministic ensemble-mean kernel is used; otherwise pass a realization
/// and the single-realization turbulent kernel is applied.
cplx image_amplitude(const ApodizationProblem& problem, const PupilAmplitude& T,
                     const TransversePoint& xi, bool mean,
                     const RefractiveFieldRealization* realization = nullptr);

KernelMatrix build_Ks(const ApodizationProblem& problem);

/// Largest eigenpair of the concentration kernel. Ties at the top are
/// resolved deterministically and reported via `degeneracy`.
EigenResult solve_concentration(const ApodizationProblem& problem,
                                const KernelMatrix& matrix);

/// Full eigendecomposition of the one-plane operator at a = b, tagged by
/// parity. The operator commutes exactly with the node negation, so it is
/// block-diagonalized into even/odd subspaces before the dense solve; at
/// delta = 0 the blocks are purely real / purely imaginary and the
/// even-real / odd-imaginary eigenvalue dichotomy holds to machine precision.
std::vector<EigenResult> solve_alpha(const ApodizationProblem& problem);

/// All eigenvalues of the symmetrized kernel, ascending (real: the matrix is
/// Hermitian).
std::vector<double> concentration_spectrum(const KernelMatrix& matrix);

/// Rayleigh quotient of T against the assembled kernel.
double energy_ratio(const KernelMatrix& matrix, const PupilAmplitude& T);
double energy_ratio(const ApodizationProblem& problem, const PupilAmplitude& T);

/// Independent cross-check for solve_concentration: power iteration on the
/// symmetrized matrix, converged to `tol` on the Rayleigh quotient.
double power_iteration_lambda_max(const KernelMatrix& matrix, double tol = 1e-12,
                                  int max_iter = 100000);

/// Magnitude of the cross term the mean-energy kernel drops (the
/// 2 K[x] conj(K[y]) coupling), sampled over a few node combinations.
double cross_term_diagnostic(const ApodizationProblem& problem);

}  // namespace rytov
