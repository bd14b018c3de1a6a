#include "rytov/turbulence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rytov/philox.hpp"

namespace rytov {

namespace {
constexpr double kRefractConst = 79e-6;  // 3*C1/(2*k) for optical frequencies
}

WaveParams WaveParams::from_wavelength(double lambda) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("WaveParams: wavelength must be positive");
    }
    WaveParams w;
    w.wavelength = lambda;
    w.wavenumber = std::isinf(lambda) ? 0.0 : 2.0 * std::numbers::pi / lambda;
    return w;
}

WaveParams WaveParams::from_wavenumber(double k0) {
    if (k0 < 0.0) throw std::invalid_argument("WaveParams: wavenumber must be >= 0");
    WaveParams w;
    w.wavenumber = k0;
    w.wavelength = k0 == 0.0 ? std::numeric_limits<double>::infinity()
                             : 2.0 * std::numbers::pi / k0;
    return w;
}

void AtmosphericState::validate() const {
    if (!(pressure_mb > 0.0)) throw std::invalid_argument("AtmosphericState: p must be > 0");
    if (!(temperature_K > 0.0)) throw std::invalid_argument("AtmosphericState: T must be > 0");
    if (!(gamma > 1.0)) throw std::invalid_argument("AtmosphericState: gamma must be > 1");
}

CnProfile CnProfile::constant(double cn) {
    if (!(cn >= 0.0)) throw std::invalid_argument("CnProfile: Cn must be >= 0");
    CnProfile p;
    p.constant_ = true;
    p.cn_ = cn;
    return p;
}

CnProfile CnProfile::from_table(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw std::invalid_argument("CnProfile: need at least 2 knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!(knots[i].first > 0.0)) {
            throw std::invalid_argument("CnProfile: heights must be positive");
        }
        if (!(knots[i].second > 0.0)) {
            throw std::invalid_argument("CnProfile: Cn values must be positive");
        }
        if (i > 0 && !(knots[i].first > knots[i - 1].first)) {
            throw std::invalid_argument("CnProfile: heights must be strictly increasing");
        }
    }
    CnProfile p;
    p.knots_ = std::move(knots);
    return p;
}

CnProfile CnProfile::table_3_1() {
    return from_table({{0.001, 30e-8},
                       {0.003, 20e-8},
                       {0.01, 15e-8},
                       {0.03, 10e-8},
                       {0.1, 6e-8},
                       {0.3, 4e-8},
                       {1.0, 1e-8},
                       {3.0, 1e-8}});
}

CnProfile CnProfile::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("CnProfile: cannot open " + path.string());
    std::vector<std::pair<double, double>> knots;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double h, cn;
        if (ls >> h >> cn) knots.emplace_back(h, cn);
    }
    return from_table(std::move(knots));
}

double CnProfile::min_height_km() const {
    return constant_ ? 0.0 : knots_.front().first;
}
double CnProfile::max_height_km() const {
    return constant_ ? std::numeric_limits<double>::infinity() : knots_.back().first;
}

double refractivity(const AtmosphericState& state) {
    state.validate();
    return kRefractConst * state.pressure_mb / state.temperature_K;
}

double delta_n_from_delta_T(const AtmosphericState& state, double delta_T_K) {
    state.validate();
    return kRefractConst / (state.gamma - 1.0) * state.pressure_mb /
           (state.temperature_K * state.temperature_K) * delta_T_K;
}

double cn_from_ct(const AtmosphericState& state, double ct) {
    state.validate();
    if (ct < 0.0) throw std::invalid_argument("cn_from_ct: C_T must be >= 0");
    return kRefractConst * state.pressure_mb /
           (state.temperature_K * state.temperature_K) * ct;
}

double cn_lookup(const CnProfile& profile, double height_km) {
    if (profile.constant_) return profile.cn_;
    const auto& k = profile.knots_;
    if (height_km < k.front().first || height_km > k.back().first) {
        throw std::out_of_range("cn_lookup: height outside profile range");
    }
    auto it = std::lower_bound(k.begin(), k.end(), height_km,
                               [](const auto& kn, double h) { return kn.first < h; });
    if (it->first == height_km) return it->second;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (std::log(height_km) - std::log(lo.first)) /
                     (std::log(hi.first) - std::log(lo.first));
    return lo.second + t * (hi.second - lo.second);
}

ValidityResult rytov_validity(const WaveParams& wave, const CnProfile& profile,
                              double L_m) {
    if (!(L_m > 0.0)) throw std::invalid_argument("rytov_validity: L must be > 0");
    // Substituting z = u^6 turns z^(5/6) dz into the polynomial 6 u^10 du, so
    // Gauss-Legendre panels converge at machine precision despite the
    // singular derivative of the integrand at z = 0.
    const double lo_m = profile.is_constant()
                            ? 0.0
                            : std::min(profile.min_height_km() * 1000.0, L_m);
    double integral = 0.0;
    std::vector<double> us, ws;
    std::vector<double> breaks;  // panel edges in u = z^(1/6)
    breaks.push_back(std::pow(lo_m, 1.0 / 6.0));
    if (!profile.is_constant()) {
        for (const auto& kn : profile.knots()) {
            const double zm = kn.first * 1000.0;
            if (zm > lo_m && zm < L_m) breaks.push_back(std::pow(zm, 1.0 / 6.0));
        }
    }
    breaks.push_back(std::pow(L_m, 1.0 / 6.0));
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        gauss_legendre(24, breaks[s], breaks[s + 1], us, ws);
        for (std::size_t i = 0; i < us.size(); ++i) {
            const double u = us[i];
            const double z = std::pow(u, 6.0);
            const double cn = profile.is_constant() ? cn_lookup(profile, 0.0)
                                                    : cn_lookup(profile, z / 1000.0);
            integral += ws[i] * cn * cn * 6.0 * std::pow(u, 10.0);
        }
    }
    ValidityResult out;
    out.value = std::pow(wave.wavenumber, 7.0 / 6.0) * integral;
    out.valid = out.value < 1.0;
    return out;
}

double TurbulenceSpec::smallness_diagnostic() const {
    if (!grid || grid->weights.empty()) return 0.0;
    const double wmin = *std::min_element(grid->weights.begin(), grid->weights.end());
    return delta * sigma / std::sqrt(wmin);
}

RefractiveFieldRealization sample_field(const TurbulenceSpec& spec,
                                        std::uint64_t realization_index) {
    if (!spec.grid) throw std::invalid_argument("sample_field: spec has no grid");
    if (spec.sigma < 0.0 || spec.delta < 0.0) {
        throw std::invalid_argument("sample_field: delta and sigma must be >= 0");
    }
    RefractiveFieldRealization field;
    field.grid = spec.grid;
    field.seed = spec.seed;
    field.index = realization_index;
    field.values.resize(spec.grid->size());
    const rng::Philox4x32 gen(spec.seed);
    for (std::size_t c = 0; c < field.values.size(); ++c) {
        field.values[c] = spec.sigma / std::sqrt(spec.grid->weights[c]) *
                          rng::normal(gen, realization_index, c);
    }
    return field;
}

}  // namespace rytov
