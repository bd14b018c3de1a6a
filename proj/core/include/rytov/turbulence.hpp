#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "rytov/quadrature.hpp"

namespace rytov {

/// Wavelength / wavenumber bundle. wavelength may be +inf, which gives the
/// static limit k0 = 0.
struct WaveParams {
    double wavelength = 0.0;  // meters
    double wavenumber = 0.0;  // k0 = 2*pi/wavelength, 1/meters

    static WaveParams from_wavelength(double lambda);
    static WaveParams from_wavenumber(double k0);
};

struct AtmosphericState {
    double pressure_mb = 0.0;    // millibars
    double temperature_K = 0.0;  // kelvins
    double gamma = 1.4;          // adiabatic exponent

    void validate() const;
};

/// Refractive-index structure coefficient Cn as a function of height, either
/// a constant or a table interpolated log-linearly in height. Table lookups
/// never extrapolate.
class CnProfile {
  public:
    static CnProfile constant(double cn);
    static CnProfile from_table(std::vector<std::pair<double, double>> knots);
    static CnProfile table_3_1();  // built-in low-altitude profile
    static CnProfile from_file(const std::filesystem::path& path);

    bool is_constant() const { return constant_; }
    double min_height_km() const;
    double max_height_km() const;
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  private:
    bool constant_ = false;
    double cn_ = 0.0;
    std::vector<std::pair<double, double>> knots_;  // (height km, Cn m^-1/3)
    friend double cn_lookup(const CnProfile&, double);
};

/// n - 1 = 79e-6 * p / T.
double refractivity(const AtmosphericState& state);

/// Refractive-index fluctuation produced by a temperature fluctuation:
/// 79e-6 / (gamma - 1) * p / T^2 * dT.
double delta_n_from_delta_T(const AtmosphericState& state, double delta_T_K);

/// Cn = 79e-6 * p / T^2 * C_T.
double cn_from_ct(const AtmosphericState& state, double ct);

/// Cn at the given height (km); log-linear interpolation between table knots,
/// out-of-range error beyond them.
double cn_lookup(const CnProfile& profile, double height_km);

struct ValidityResult {
    double value = 0.0;
    bool valid = false;
};

/// Weak-fluctuation validity value k0^(7/6) * integral of Cn^2(z) z^(5/6)
/// over the path [0, L] (meters); valid when the value is below 1. For table
/// profiles the path is read as vertical (height = distance) and the integral
/// starts at the first knot.
ValidityResult rytov_validity(const WaveParams& wave, const CnProfile& profile,
                              double L_m);

/// White-noise fluctuation model: E(n1(a) n1(b)) = sigma^2 * delta3(a - b),
/// discretized as iid N(0, sigma^2 / V_cell) per quadrature cell.
struct TurbulenceSpec {
    double delta = 0.0;  // smallness parameter
    double sigma = 0.0;  // white-noise strength, m^(3/2)
    std::shared_ptr<const QuadratureGrid> grid;
    std::uint64_t seed = 0;

    /// delta * (typical |n1|) = delta * sigma / sqrt(min cell volume);
    /// reported, not enforced.
    double smallness_diagnostic() const;
};

struct RefractiveFieldRealization {
    std::shared_ptr<const QuadratureGrid> grid;
    std::vector<double> values;  // n1 per grid node
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

/// Draws realization `realization_index`; the value of cell c depends only on
/// (seed, realization_index, c).
RefractiveFieldRealization sample_field(const TurbulenceSpec& spec,
                                        std::uint64_t realization_index);

}  // namespace rytov
