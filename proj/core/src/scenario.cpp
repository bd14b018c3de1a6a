#include "rytov/scenario.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "rytov/montecarlo.hpp"

namespace rytov {

namespace fs = std::filesystem;

const char* version_string() { return "0.1.0"; }

const char* command_name(Command c) {
    switch (c) {
        case Command::Greens: return "greens";
        case Command::Validity: return "validity";
        case Command::Rytov: return "rytov";
        case Command::TimeReversal: return "time-reversal";
        case Command::Apodize: return "apodize";
    }
    return "?";
}

std::string format_g17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::string fmt_num(double v) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value in output");
    return format_g17(v);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_double_token(const std::string& tok, const std::string& key) {
    std::string t = tok;
    double v = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw ScenarioError("key '" + key + "': cannot parse number '" + tok + "'");
    }
    return v;
}

std::int64_t parse_int_token(const std::string& tok, const std::string& key) {
    std::int64_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw ScenarioError("key '" + key + "': cannot parse integer '" + tok + "'");
    }
    return v;
}

/// Raw key-value document with consumption tracking; leftover keys are a
/// configuration error.
class KvDoc {
  public:
    explicit KvDoc(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ScenarioError("line " + std::to_string(lineno) +
                                    ": expected 'key = value'");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ScenarioError("line " + std::to_string(lineno) + ": empty key");
            }
            if (!kv_.emplace(key, value).second) {
                throw ScenarioError("duplicate key '" + key + "'");
            }
        }
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string req_string(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ScenarioError("missing required key '" + key + "'");
        consumed_.insert(key);
        return it->second;
    }
    std::string opt_string(const std::string& key, const std::string& fallback) {
        return has(key) ? req_string(key) : fallback;
    }
    double req_double(const std::string& key) {
        return parse_double_token(req_string(key), key);
    }
    double opt_double(const std::string& key, double fallback) {
        return has(key) ? req_double(key) : fallback;
    }
    std::uint64_t opt_u64(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const auto v = parse_int_token(req_string(key), key);
        if (v < 0) throw ScenarioError("key '" + key + "' must be >= 0");
        return static_cast<std::uint64_t>(v);
    }
    std::vector<double> req_doubles(const std::string& key, std::size_t count = 0) {
        const auto toks = split_ws(req_string(key));
        if (count != 0 && toks.size() != count) {
            throw ScenarioError("key '" + key + "' needs " + std::to_string(count) +
                                " numbers, got " + std::to_string(toks.size()));
        }
        std::vector<double> out;
        out.reserve(toks.size());
        for (const auto& t : toks) out.push_back(parse_double_token(t, key));
        return out;
    }
    std::vector<std::int64_t> req_ints(const std::string& key, std::size_t count) {
        const auto toks = split_ws(req_string(key));
        if (toks.size() != count) {
            throw ScenarioError("key '" + key + "' needs " + std::to_string(count) +
                                " integers");
        }
        std::vector<std::int64_t> out;
        for (const auto& t : toks) out.push_back(parse_int_token(t, key));
        return out;
    }

    void finish() const {
        std::string unknown;
        for (const auto& [k, v] : kv_) {
            if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
        }
        if (!unknown.empty()) throw ScenarioError("unknown keys: " + unknown);
    }

  private:
    std::map<std::string, std::string> kv_;
    std::set<std::string> consumed_;
};

Point3 req_point(KvDoc& doc, const std::string& key) {
    const auto v = doc.req_doubles(key, 3);
    return {v[0], v[1], v[2]};
}

void parse_turbulence(KvDoc& doc, Scenario& s, bool required) {
    const bool any = doc.has("turbulence.delta") || doc.has("turbulence.sigma") ||
                     doc.has("field.box") || doc.has("field.cells");
    if (!any) {
        if (required) throw ScenarioError("missing required block: turbulence/field");
        return;
    }
    s.turb.present = true;
    s.turb.delta = doc.opt_double("turbulence.delta", 0.0);
    if (s.turb.delta < 0.0) throw ScenarioError("turbulence.delta must be >= 0");
    const auto box = doc.req_doubles("field.box", 6);
    for (int a = 0; a < 3; ++a) {
        s.turb.box[a] = {box[2 * a], box[2 * a + 1]};
        if (!(s.turb.box[a].length() > 0.0)) {
            throw ScenarioError("field.box intervals must have positive length");
        }
    }
    const auto cells = doc.req_ints("field.cells", 3);
    for (int a = 0; a < 3; ++a) {
        if (cells[a] < 1) throw ScenarioError("field.cells must be >= 1");
        s.turb.cells[a] = static_cast<int>(cells[a]);
    }
    const std::string rule = doc.opt_string("field.rule", "midpoint");
    if (rule == "midpoint") {
        s.turb.rule = QuadRule::Midpoint;
    } else if (rule == "gauss") {
        s.turb.rule = QuadRule::GaussLegendre;
    } else {
        throw ScenarioError("field.rule must be 'midpoint' or 'gauss'");
    }
    const std::string excl = doc.opt_string("field.exclusion", "auto");
    if (excl == "auto") {
        s.turb.exclusion_auto = true;
        s.turb.exclusion = 0.0;
    } else {
        s.turb.exclusion_auto = false;
        s.turb.exclusion = parse_double_token(excl, "field.exclusion");
        if (s.turb.exclusion < 0.0) throw ScenarioError("field.exclusion must be >= 0");
    }
    if (doc.has("turbulence.sigma")) {
        s.turb.sigma = doc.req_double("turbulence.sigma");
        if (s.turb.sigma < 0.0) throw ScenarioError("turbulence.sigma must be >= 0");
        s.turb.sigma_defaulted = false;
    } else {
        // Default strength: keeps delta^2 sigma^2 k0^4 ell at 1e-2 for the
        // field-box scale ell, small enough for the first-order expansion.
        const double k0 = 2.0 * std::numbers::pi / s.wavelength;
        const double ell = std::sqrt(s.turb.box[0].length() * s.turb.box[0].length() +
                                     s.turb.box[1].length() * s.turb.box[1].length() +
                                     s.turb.box[2].length() * s.turb.box[2].length());
        if (s.turb.delta > 0.0 && k0 > 0.0) {
            s.turb.sigma = 0.1 / (s.turb.delta * k0 * k0 * std::sqrt(ell));
        }
        s.turb.sigma_defaulted = true;
    }
}

std::shared_ptr<const QuadratureGrid> build_field_grid(const TurbulenceConfig& t) {
    auto g = build_grid(t.box, t.cells, t.rule);
    if (!t.exclusion_auto) g.exclusion_radius = t.exclusion;
    return std::make_shared<QuadratureGrid>(std::move(g));
}

std::string join_doubles(std::span<const double> vals) {
    std::string out;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) out += ' ';
        out += format_g17(vals[i]);
    }
    return out;
}

using Summary = std::vector<std::pair<std::string, std::string>>;

std::string render_summary(const Summary& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    KvDoc doc(text);
    Scenario s;

    const std::string cmd = doc.req_string("command");
    if (cmd == "greens") s.command = Command::Greens;
    else if (cmd == "validity") s.command = Command::Validity;
    else if (cmd == "rytov") s.command = Command::Rytov;
    else if (cmd == "time-reversal") s.command = Command::TimeReversal;
    else if (cmd == "apodize") s.command = Command::Apodize;
    else throw ScenarioError("unknown command '" + cmd + "'");

    s.wavelength = doc.req_double("wavelength");
    if (!(s.wavelength > 0.0)) {
        throw ScenarioError("wavelength must be positive (meters; 'inf' gives k0 = 0)");
    }
    s.seed = doc.opt_u64("seed", 0);
    const std::string conv = doc.opt_string("convention", "gaussian");
    if (conv == "gaussian") s.convention = Convention::Gaussian;
    else if (conv == "paper") s.convention = Convention::Paper;
    else throw ScenarioError("convention must be 'gaussian' or 'paper'");
    s.output_prefix = doc.opt_string("output_prefix", "");

    switch (s.command) {
        case Command::Greens: {
            s.source = req_point(doc, "greens.source");
            s.observation = req_point(doc, "greens.observation");
            if (s.source == s.observation) {
                throw ScenarioError("greens: source and observation coincide");
            }
            parse_turbulence(doc, s, false);
            break;
        }
        case Command::Validity: {
            s.profile_kind = doc.opt_string("validity.profile", "table31");
            if (s.profile_kind == "constant") {
                s.profile_cn = doc.req_double("validity.cn");
                if (!(s.profile_cn >= 0.0)) throw ScenarioError("validity.cn must be >= 0");
            } else if (s.profile_kind == "file") {
                s.profile_file = doc.req_string("validity.profile_file");
            } else if (s.profile_kind != "table31") {
                throw ScenarioError("validity.profile must be table31|constant|file");
            }
            s.lengths_km = doc.req_doubles("validity.lengths_km");
            if (s.lengths_km.empty()) throw ScenarioError("validity.lengths_km is empty");
            for (double l : s.lengths_km) {
                if (!(l > 0.0)) throw ScenarioError("validity.lengths_km must be > 0");
            }
            break;
        }
        case Command::Rytov: {
            s.source = req_point(doc, "rytov.source");
            s.observation = req_point(doc, "rytov.observation");
            if (s.source == s.observation) {
                throw ScenarioError("rytov: source and observation coincide");
            }
            s.realizations = doc.opt_u64("rytov.realizations", 0);
            parse_turbulence(doc, s, true);
            break;
        }
        case Command::TimeReversal: {
            if (doc.has("tr.mirror_elements") == doc.has("tr.mirror_grid")) {
                throw ScenarioError(
                    "time-reversal needs exactly one of tr.mirror_elements / tr.mirror_grid");
            }
            if (doc.has("tr.mirror_grid")) {
                const auto g = doc.req_doubles("tr.mirror_grid", 3);
                const int ny = static_cast<int>(g[0]);
                const int nz = static_cast<int>(g[1]);
                if (ny < 1 || nz < 1 || g[0] != ny || g[1] != nz || !(g[2] > 0.0)) {
                    throw ScenarioError("tr.mirror_grid = ny nz spacing (positive)");
                }
                s.mirror_elements = MirrorSpec::grid(ny, nz, g[2]).elements;
            } else {
                const auto v = doc.req_doubles("tr.mirror_elements");
                if (v.empty() || v.size() % 3 != 0) {
                    throw ScenarioError("tr.mirror_elements = y z w triples");
                }
                for (std::size_t i = 0; i < v.size(); i += 3) {
                    if (!(v[i + 2] > 0.0)) {
                        throw ScenarioError("tr.mirror_elements weights must be > 0");
                    }
                    s.mirror_elements.push_back({{0.0, v[i], v[i + 1]}, v[i + 2]});
                }
            }
            s.tr_source = req_point(doc, "tr.source");
            if (s.tr_source.x == 0.0) {
                throw ScenarioError("tr.source must be off the mirror plane x = 0");
            }
            const auto e = doc.req_doubles("tr.eval", 6);
            s.eval_y = {e[0], e[1]};
            s.eval_z = {e[3], e[4]};
            const int ny = static_cast<int>(e[2]);
            const int nz = static_cast<int>(e[5]);
            if (ny < 1 || nz < 1 || e[2] != ny || e[5] != nz) {
                throw ScenarioError("tr.eval = y0 y1 ny z0 z1 nz with positive counts");
            }
            s.eval_counts = {ny, nz};
            s.tr_mode = doc.opt_string("tr.mode", "single");
            if (s.tr_mode != "single" && s.tr_mode != "mean" && s.tr_mode != "mc") {
                throw ScenarioError("tr.mode must be single|mean|mc");
            }
            s.realizations = doc.opt_u64("tr.realizations", 0);
            parse_turbulence(doc, s, s.tr_mode != "single");
            if (s.tr_mode == "mc" && s.realizations < 2) {
                throw ScenarioError("tr.mode = mc needs tr.realizations >= 2");
            }
            break;
        }
        case Command::Apodize: {
            s.ap_pupil_radius = doc.req_double("ap.pupil_radius");
            s.ap_image_radius = doc.req_double("ap.image_radius");
            s.ap_distance = doc.req_double("ap.distance");
            if (!(s.ap_pupil_radius > 0.0 && s.ap_image_radius > 0.0 &&
                  s.ap_distance > 0.0)) {
                throw ScenarioError("apodize radii and distance must be > 0");
            }
            auto nodes2 = [&](const std::string& key, std::array<int, 2> fallback) {
                if (!doc.has(key)) return fallback;
                const auto v = doc.req_ints(key, 2);
                if (v[0] < 1 || v[1] < 2 || v[1] % 2 != 0) {
                    throw ScenarioError(key + " = n_radial n_angular (angular even)");
                }
                return std::array<int, 2>{static_cast<int>(v[0]), static_cast<int>(v[1])};
            };
            s.pupil_nodes = nodes2("ap.pupil_nodes", {16, 16});
            s.image_nodes = nodes2("ap.image_nodes", {16, 16});
            if (doc.has("ap.slab_cells")) {
                const auto v = doc.req_ints("ap.slab_cells", 3);
                for (int a = 0; a < 3; ++a) {
                    if (v[a] < 1) throw ScenarioError("ap.slab_cells must be >= 1");
                    s.slab_cells[a] = static_cast<int>(v[a]);
                }
            }
            s.slab_halfwidth = doc.opt_double("ap.slab_halfwidth", 0.0);
            if (s.slab_halfwidth < 0.0) throw ScenarioError("ap.slab_halfwidth must be >= 0");
            if (doc.has("turbulence.delta") || doc.has("turbulence.sigma")) {
                s.turb.present = true;
                s.turb.delta = doc.opt_double("turbulence.delta", 0.0);
                s.turb.sigma = doc.opt_double("turbulence.sigma", 0.0);
                if (s.turb.delta < 0.0 || s.turb.sigma < 0.0) {
                    throw ScenarioError("turbulence.delta/sigma must be >= 0");
                }
            }
            break;
        }
    }
    doc.finish();
    return s;
}

Scenario parse_scenario_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string Scenario::serialize() const {
    Summary kv;
    kv.emplace_back("command", command_name(command));
    kv.emplace_back("wavelength", format_g17(wavelength));
    kv.emplace_back("seed", std::to_string(seed));
    kv.emplace_back("convention",
                    convention == Convention::Paper ? "paper" : "gaussian");
    if (!output_prefix.empty()) kv.emplace_back("output_prefix", output_prefix);

    switch (command) {
        case Command::Greens: {
            const double src[3] = {source.x, source.y, source.z};
            const double obs[3] = {observation.x, observation.y, observation.z};
            kv.emplace_back("greens.source", join_doubles(src));
            kv.emplace_back("greens.observation", join_doubles(obs));
            break;
        }
        case Command::Validity: {
            kv.emplace_back("validity.profile", profile_kind);
            if (profile_kind == "constant") {
                kv.emplace_back("validity.cn", format_g17(profile_cn));
            } else if (profile_kind == "file") {
                kv.emplace_back("validity.profile_file", profile_file);
            }
            kv.emplace_back("validity.lengths_km", join_doubles(lengths_km));
            break;
        }
        case Command::Rytov: {
            const double src[3] = {source.x, source.y, source.z};
            const double obs[3] = {observation.x, observation.y, observation.z};
            kv.emplace_back("rytov.source", join_doubles(src));
            kv.emplace_back("rytov.observation", join_doubles(obs));
            kv.emplace_back("rytov.realizations", std::to_string(realizations));
            break;
        }
        case Command::TimeReversal: {
            std::vector<double> flat;
            for (const auto& e : mirror_elements) {
                flat.push_back(e.center.y);
                flat.push_back(e.center.z);
                flat.push_back(e.weight);
            }
            kv.emplace_back("tr.mirror_elements", join_doubles(flat));
            const double src[3] = {tr_source.x, tr_source.y, tr_source.z};
            kv.emplace_back("tr.source", join_doubles(src));
            const double ev[6] = {eval_y[0], eval_y[1], static_cast<double>(eval_counts[0]),
                                  eval_z[0], eval_z[1], static_cast<double>(eval_counts[1])};
            kv.emplace_back("tr.eval", join_doubles(ev));
            kv.emplace_back("tr.mode", tr_mode);
            kv.emplace_back("tr.realizations", std::to_string(realizations));
            break;
        }
        case Command::Apodize: {
            kv.emplace_back("ap.pupil_radius", format_g17(ap_pupil_radius));
            kv.emplace_back("ap.image_radius", format_g17(ap_image_radius));
            kv.emplace_back("ap.distance", format_g17(ap_distance));
            kv.emplace_back("ap.pupil_nodes", std::to_string(pupil_nodes[0]) + " " +
                                                  std::to_string(pupil_nodes[1]));
            kv.emplace_back("ap.image_nodes", std::to_string(image_nodes[0]) + " " +
                                                  std::to_string(image_nodes[1]));
            kv.emplace_back("ap.slab_cells", std::to_string(slab_cells[0]) + " " +
                                                 std::to_string(slab_cells[1]) + " " +
                                                 std::to_string(slab_cells[2]));
            kv.emplace_back("ap.slab_halfwidth", format_g17(slab_halfwidth));
            if (turb.present) {
                kv.emplace_back("turbulence.delta", format_g17(turb.delta));
                kv.emplace_back("turbulence.sigma", format_g17(turb.sigma));
            }
            break;
        }
    }
    if (turb.present && command != Command::Apodize) {
        kv.emplace_back("turbulence.delta", format_g17(turb.delta));
        kv.emplace_back("turbulence.sigma", format_g17(turb.sigma));
        const double box[6] = {turb.box[0].lo, turb.box[0].hi, turb.box[1].lo,
                               turb.box[1].hi, turb.box[2].lo, turb.box[2].hi};
        kv.emplace_back("field.box", join_doubles(box));
        kv.emplace_back("field.cells", std::to_string(turb.cells[0]) + " " +
                                           std::to_string(turb.cells[1]) + " " +
                                           std::to_string(turb.cells[2]));
        kv.emplace_back("field.rule",
                        turb.rule == QuadRule::Midpoint ? "midpoint" : "gauss");
        kv.emplace_back("field.exclusion",
                        turb.exclusion_auto ? "auto" : format_g17(turb.exclusion));
    }
    return render_summary(kv);
}

std::string scenario_digest(const Scenario& scenario) {
    return fnv1a_hex(scenario.serialize() + "#version=" + version_string() + "\n");
}

namespace {

bool turbulence_active(const Scenario& s) {
    return s.turb.present && s.turb.delta > 0.0 && s.turb.sigma > 0.0;
}

void summary_header(Summary& kv, const Scenario& s) {
    kv.emplace_back("tool", "rytov");
    kv.emplace_back("version", version_string());
    kv.emplace_back("command", command_name(s.command));
    kv.emplace_back("digest", scenario_digest(s));
    kv.emplace_back("wavelength", fmt_num(s.wavelength));
    kv.emplace_back("wavenumber",
                    fmt_num(WaveParams::from_wavelength(s.wavelength).wavenumber));
    kv.emplace_back("seed", std::to_string(s.seed));
    kv.emplace_back("convention",
                    s.convention == Convention::Paper ? "paper" : "gaussian");
}

void run_greens(const Scenario& s, ResultBundle& bundle) {
    const auto wave = WaveParams::from_wavelength(s.wavelength);
    Summary kv;
    summary_header(kv, s);
    const cplx g = g0(s.source, s.observation, wave);
    kv.emplace_back("distance", fmt_num(distance(s.source, s.observation)));
    kv.emplace_back("g0_re", fmt_num(g.real()));
    kv.emplace_back("g0_im", fmt_num(g.imag()));
    kv.emplace_back("g0_abs", fmt_num(std::abs(g)));
    kv.emplace_back("g0_phase", fmt_num(std::arg(g)));
    if (turbulence_active(s)) {
        auto grid = build_field_grid(s.turb);
        const TurbulenceSpec spec{s.turb.delta, s.turb.sigma, grid, s.seed};
        const auto field = sample_field(spec, 0);
        const auto tg =
            turbulent_green(s.source, s.observation, s.turb.delta, field, *grid, wave);
        const cplx mg = mean_turbulent_green(s.source, s.observation, spec, wave,
                                             s.convention);
        kv.emplace_back("turbulent_re", fmt_num(tg.value.real()));
        kv.emplace_back("turbulent_im", fmt_num(tg.value.imag()));
        kv.emplace_back("mean_re", fmt_num(mg.real()));
        kv.emplace_back("mean_im", fmt_num(mg.imag()));
        kv.emplace_back("smallness_diagnostic", fmt_num(spec.smallness_diagnostic()));
    }
    bundle.files.emplace_back("summary.txt", render_summary(kv));
}

CnProfile scenario_profile(const Scenario& s) {
    if (s.profile_kind == "constant") return CnProfile::constant(s.profile_cn);
    if (s.profile_kind == "file") return CnProfile::from_file(s.profile_file);
    return CnProfile::table_3_1();
}

void run_validity(const Scenario& s, ResultBundle& bundle) {
    const auto wave = WaveParams::from_wavelength(s.wavelength);
    const auto profile = scenario_profile(s);
    std::string csv = "length_km,value,valid\n";
    bool all_valid = true;
    for (double lkm : s.lengths_km) {
        const auto res = rytov_validity(wave, profile, lkm * 1000.0);
        all_valid = all_valid && res.valid;
        csv += fmt_num(lkm) + "," + fmt_num(res.value) + "," + (res.valid ? "1" : "0") +
               "\n";
    }
    Summary kv;
    summary_header(kv, s);
    kv.emplace_back("profile", s.profile_kind);
    kv.emplace_back("lengths", std::to_string(s.lengths_km.size()));
    kv.emplace_back("all_valid", all_valid ? "1" : "0");
    bundle.files.emplace_back("summary.txt", render_summary(kv));
    bundle.files.emplace_back("validity.csv", csv);
}

void run_rytov(const Scenario& s, ResultBundle& bundle) {
    const auto wave = WaveParams::from_wavelength(s.wavelength);
    auto grid = build_field_grid(s.turb);
    const TurbulenceSpec spec{s.turb.delta, s.turb.sigma, grid, s.seed};
    Summary kv;
    summary_header(kv, s);
    const cplx g = g0(s.source, s.observation, wave);
    kv.emplace_back("g0_re", fmt_num(g.real()));
    kv.emplace_back("g0_im", fmt_num(g.imag()));

    const auto field = sample_field(spec, 0);
    const auto tg =
        turbulent_green(s.source, s.observation, s.turb.delta, field, *grid, wave);
    kv.emplace_back("realization0_re", fmt_num(tg.value.real()));
    kv.emplace_back("realization0_im", fmt_num(tg.value.imag()));
    kv.emplace_back("exponent_re", fmt_num(tg.exponent.real()));
    kv.emplace_back("exponent_im", fmt_num(tg.exponent.imag()));

    const cplx mg_gauss = mean_turbulent_green(s.source, s.observation, spec, wave,
                                               Convention::Gaussian);
    const cplx mg_paper =
        mean_turbulent_green(s.source, s.observation, spec, wave, Convention::Paper);
    kv.emplace_back("mean_gaussian_re", fmt_num(mg_gauss.real()));
    kv.emplace_back("mean_gaussian_im", fmt_num(mg_gauss.imag()));
    kv.emplace_back("mean_paper_re", fmt_num(mg_paper.real()));
    kv.emplace_back("mean_paper_im", fmt_num(mg_paper.imag()));

    if (s.realizations >= 2) {
        const MonteCarloSpec mc{s.realizations, s.seed};
        const auto est = mc_mean(
            mc, [&](std::uint64_t i) { return sample_field(spec, i); },
            [&](const RefractiveFieldRealization& f) {
                return turbulent_green(s.source, s.observation, s.turb.delta, f, *grid,
                                       wave)
                    .value;
            });
        kv.emplace_back("mc_mean_re", fmt_num(est.mean.real()));
        kv.emplace_back("mc_mean_im", fmt_num(est.mean.imag()));
        kv.emplace_back("mc_se", fmt_num(est.standard_error));
        kv.emplace_back("mc_samples", std::to_string(s.realizations));
    }
    kv.emplace_back("smallness_diagnostic", fmt_num(spec.smallness_diagnostic()));
    bundle.files.emplace_back("summary.txt", render_summary(kv));
}

void run_time_reversal(const Scenario& s, ResultBundle& bundle) {
    const auto wave = WaveParams::from_wavelength(s.wavelength);
    MirrorSpec mirror{s.mirror_elements};
    mirror.validate();
    const auto src = SourceField::point(s.tr_source);

    std::vector<Point3> points;
    points.reserve(static_cast<std::size_t>(s.eval_counts[0]) * s.eval_counts[1]);
    auto coord = [](const std::array<double, 2>& range, int n, int i) {
        return n == 1 ? range[0]
                      : range[0] + (range[1] - range[0]) * i / static_cast<double>(n - 1);
    };
    for (int iy = 0; iy < s.eval_counts[0]; ++iy) {
        for (int iz = 0; iz < s.eval_counts[1]; ++iz) {
            points.push_back({s.tr_source.x, coord(s.eval_y, s.eval_counts[0], iy),
                              coord(s.eval_z, s.eval_counts[1], iz)});
        }
    }

    RefocusResult result;
    if (s.tr_mode == "mean") {
        auto grid = build_field_grid(s.turb);
        const TurbulenceSpec spec{s.turb.delta, s.turb.sigma, grid, s.seed};
        result = mean_refocus(src, mirror, points, spec, wave, s.convention);
    } else if (s.tr_mode == "mc") {
        auto grid = build_field_grid(s.turb);
        const TurbulenceSpec spec{s.turb.delta, s.turb.sigma, grid, s.seed};
        result = mc_refocus(src, mirror, points, spec, wave,
                            MonteCarloSpec{s.realizations, s.seed});
    } else {
        GreensEvaluator G;
        if (turbulence_active(s)) {
            auto grid = build_field_grid(s.turb);
            const TurbulenceSpec spec{s.turb.delta, s.turb.sigma, grid, s.seed};
            G = turbulent_evaluator(s.turb.delta, sample_field(spec, 0), wave);
        } else {
            G = free_space_evaluator(wave);
        }
        result = backpropagate(mirror_field(src, mirror, G), mirror, points, G);
    }

    const bool mc = s.tr_mode == "mc";
    std::string csv = mc ? "x,y,z,psi_re,psi_im,intensity,se_psi,se_intensity\n"
                         : "x,y,z,psi_re,psi_im,intensity\n";
    for (std::size_t p = 0; p < result.points.size(); ++p) {
        csv += fmt_num(result.points[p].x) + "," + fmt_num(result.points[p].y) + "," +
               fmt_num(result.points[p].z) + "," + fmt_num(result.psi[p].real()) + "," +
               fmt_num(result.psi[p].imag()) + "," + fmt_num(result.intensity[p]);
        if (mc) {
            csv += "," + fmt_num(result.se_psi[p]) + "," + fmt_num(result.se_intensity[p]);
        }
        csv += "\n";
    }

    // Peak and the FWHM spot size along the y cut through the peak.
    std::size_t argmax = 0;
    for (std::size_t p = 1; p < result.psi.size(); ++p) {
        if (std::abs(result.psi[p]) > std::abs(result.psi[argmax])) argmax = p;
    }
    const int peak_iy = static_cast<int>(argmax) / s.eval_counts[1];
    const int peak_iz = static_cast<int>(argmax) % s.eval_counts[1];
    double fwhm = -1.0;
    if (s.eval_counts[0] >= 3) {
        std::vector<double> cut(s.eval_counts[0]);
        for (int iy = 0; iy < s.eval_counts[0]; ++iy) {
            cut[iy] = std::abs(result.psi[iy * s.eval_counts[1] + peak_iz]);
        }
        const double half = 0.5 * cut[peak_iy];
        const double dy = s.eval_counts[0] == 1
                              ? 0.0
                              : (s.eval_y[1] - s.eval_y[0]) / (s.eval_counts[0] - 1);
        double left = -1.0, right = -1.0;
        for (int iy = peak_iy; iy > 0; --iy) {
            if (cut[iy - 1] <= half && cut[iy] >= half) {
                const double t = (half - cut[iy - 1]) / (cut[iy] - cut[iy - 1]);
                left = (iy - 1 + t) * dy;
                break;
            }
        }
        for (int iy = peak_iy; iy + 1 < s.eval_counts[0]; ++iy) {
            if (cut[iy + 1] <= half && cut[iy] >= half) {
                const double t = (cut[iy] - half) / (cut[iy] - cut[iy + 1]);
                right = (iy + t) * dy;
                break;
            }
        }
        if (left >= 0.0 && right >= 0.0) fwhm = right - left;
    }

    Summary kv;
    summary_header(kv, s);
    kv.emplace_back("mode", s.tr_mode);
    kv.emplace_back("mirror_elements", std::to_string(mirror.elements.size()));
    kv.emplace_back("eval_points", std::to_string(result.points.size()));
    kv.emplace_back("peak_x", fmt_num(result.points[argmax].x));
    kv.emplace_back("peak_y", fmt_num(result.points[argmax].y));
    kv.emplace_back("peak_z", fmt_num(result.points[argmax].z));
    kv.emplace_back("peak_abs_psi", fmt_num(std::abs(result.psi[argmax])));
    kv.emplace_back("spot_fwhm_y", fmt_num(fwhm));
    bundle.files.emplace_back("summary.txt", render_summary(kv));
    bundle.files.emplace_back("refocus.csv", csv);
}

int parity_code(Parity p) {
    switch (p) {
        case Parity::Even: return 0;
        case Parity::Odd: return 1;
        case Parity::Mixed: return 2;
    }
    return 2;
}

void run_apodize(const Scenario& s, ResultBundle& bundle) {
    const auto wave = WaveParams::from_wavelength(s.wavelength);
    const bool random = turbulence_active(s);
    std::shared_ptr<const QuadratureGrid> slab;
    double halfwidth = 0.0;
    if (random) {
        halfwidth = s.slab_halfwidth > 0.0
                        ? s.slab_halfwidth
                        : 4.0 * std::max(s.ap_pupil_radius, s.ap_image_radius);
        slab = make_slab_grid(s.ap_distance, halfwidth, s.slab_cells);
    }
    const auto problem = ApodizationProblem::make(
        s.ap_pupil_radius, s.ap_image_radius, s.ap_distance, wave, s.pupil_nodes[0],
        s.pupil_nodes[1], s.image_nodes[0], s.image_nodes[1],
        random ? s.turb.delta : 0.0, random ? s.turb.sigma : 0.0, s.convention, slab);

    const auto ks = build_Ks(problem);
    const auto spectrum = concentration_spectrum(ks);
    const auto top = solve_concentration(problem, ks);
    const double power_check = power_iteration_lambda_max(ks);

    const bool square = std::abs(s.ap_pupil_radius - s.ap_image_radius) <=
                        1e-12 * s.ap_pupil_radius;
    std::string ev_csv = "index,alpha_re,alpha_im,lambda,parity,parity_defect\n";
    if (square) {
        const auto alphas = solve_alpha(problem);
        for (std::size_t k = 0; k < alphas.size(); ++k) {
            ev_csv += std::to_string(k) + "," + fmt_num(alphas[k].alpha.real()) + "," +
                      fmt_num(alphas[k].alpha.imag()) + "," +
                      fmt_num(alphas[k].lambda_prime) + "," +
                      std::to_string(parity_code(alphas[k].parity)) + "," +
                      fmt_num(alphas[k].parity_defect) + "\n";
        }
    } else {
        for (std::size_t k = 0; k < spectrum.size(); ++k) {
            const double lambda = spectrum[spectrum.size() - 1 - k];
            const double root = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
            ev_csv += std::to_string(k) + "," + fmt_num(root) + ",0," + fmt_num(lambda) +
                      ",2,0\n";
        }
    }

    std::string ef_csv = "x1,x2,psi_re,psi_im,parity\n";
    for (std::size_t i = 0; i < problem.pupil.size(); ++i) {
        ef_csv += fmt_num(problem.pupil.nodes[i].y) + "," +
                  fmt_num(problem.pupil.nodes[i].z) + "," + fmt_num(top.psi[i].real()) +
                  "," + fmt_num(top.psi[i].imag()) + "," +
                  std::to_string(parity_code(top.parity)) + "\n";
    }

    Summary kv;
    summary_header(kv, s);
    kv.emplace_back("pupil_radius", fmt_num(s.ap_pupil_radius));
    kv.emplace_back("image_radius", fmt_num(s.ap_image_radius));
    kv.emplace_back("distance", fmt_num(s.ap_distance));
    kv.emplace_back("c_parameter", fmt_num(wave.wavenumber * s.ap_pupil_radius *
                                           s.ap_image_radius / s.ap_distance));
    kv.emplace_back("pupil_nodes", std::to_string(problem.pupil.size()));
    kv.emplace_back("image_nodes", std::to_string(problem.image.size()));
    kv.emplace_back("lambda_prime", fmt_num(top.lambda_prime));
    kv.emplace_back("lambda_prime_power_iteration", fmt_num(power_check));
    kv.emplace_back("top_degeneracy", std::to_string(top.degeneracy));
    kv.emplace_back("top_parity", std::to_string(parity_code(top.parity)));
    kv.emplace_back("hermitian_defect", fmt_num(ks.hermitian_defect));
    kv.emplace_back("min_eigenvalue", fmt_num(spectrum.front()));
    kv.emplace_back("max_eigenvalue", fmt_num(spectrum.back()));
    if (random) {
        kv.emplace_back("delta", fmt_num(s.turb.delta));
        kv.emplace_back("sigma", fmt_num(s.turb.sigma));
        kv.emplace_back("slab_halfwidth", fmt_num(halfwidth));
        kv.emplace_back("cross_term_diagnostic",
                        fmt_num(cross_term_diagnostic(problem)));
    }
    bundle.files.emplace_back("summary.txt", render_summary(kv));
    bundle.files.emplace_back("eigenvalues.csv", ev_csv);
    bundle.files.emplace_back("eigenfunction.csv", ef_csv);
}

bool read_cached(const fs::path& dir, ResultBundle& bundle) {
    const fs::path entry = dir / bundle.digest;
    std::ifstream manifest(entry / "MANIFEST");
    if (!manifest) return false;
    std::string name;
    std::vector<std::pair<std::string, std::string>> files;
    while (std::getline(manifest, name)) {
        if (name.empty()) continue;
        std::ifstream in(entry / name, std::ios::binary);
        if (!in) return false;
        std::stringstream buf;
        buf << in.rdbuf();
        files.emplace_back(name, buf.str());
    }
    if (files.empty()) return false;
    bundle.files = std::move(files);
    bundle.from_cache = true;
    return true;
}

void store_cached(const fs::path& dir, const ResultBundle& bundle) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return;
    // Single writer per digest: the .lock file is create-exclusive.
    const fs::path lock = dir / (bundle.digest + ".lock");
    const int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) return;  // another writer owns this digest
    ::close(fd);
    const fs::path tmp = dir / (bundle.digest + ".tmp");
    const fs::path entry = dir / bundle.digest;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp, ec);
    if (!ec) {
        std::string manifest;
        bool ok = true;
        for (const auto& [name, bytes] : bundle.files) {
            std::ofstream out(tmp / name, std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            ok = ok && bool(out);
            manifest += name + "\n";
        }
        std::ofstream mf(tmp / "MANIFEST", std::ios::binary);
        mf << manifest;
        ok = ok && bool(mf);
        mf.close();
        if (ok && !fs::exists(entry)) fs::rename(tmp, entry, ec);
        fs::remove_all(tmp, ec);
    }
    fs::remove(lock, ec);
}

}  // namespace

ResultBundle run_scenario(const Scenario& scenario,
                          const std::optional<fs::path>& cache_dir) {
    ResultBundle bundle;
    bundle.digest = scenario_digest(scenario);
    bundle.version = version_string();

    const auto t0 = std::chrono::steady_clock::now();
    if (cache_dir && read_cached(*cache_dir, bundle)) {
        bundle.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return bundle;
    }

    switch (scenario.command) {
        case Command::Greens: run_greens(scenario, bundle); break;
        case Command::Validity: run_validity(scenario, bundle); break;
        case Command::Rytov: run_rytov(scenario, bundle); break;
        case Command::TimeReversal: run_time_reversal(scenario, bundle); break;
        case Command::Apodize: run_apodize(scenario, bundle); break;
    }
    if (!scenario.output_prefix.empty()) {
        for (auto& f : bundle.files) f.first = scenario.output_prefix + "." + f.first;
    }
    if (cache_dir) store_cached(*cache_dir, bundle);
    bundle.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return bundle;
}

void write_bundle(const ResultBundle& bundle, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    for (const auto& [name, bytes] : bundle.files) {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (out_dir / name).string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
}

}  // namespace rytov
