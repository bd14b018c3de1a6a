#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rytov/apodization.hpp"
#include "rytov/time_reversal.hpp"

namespace rytov {

/// Configuration problem: exit code 2 at the CLI.
class ScenarioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values or violated numerical invariants: exit code 3.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Command { Greens, Validity, Rytov, TimeReversal, Apodize };

const char* command_name(Command c);

struct TurbulenceConfig {
    bool present = false;
    double delta = 0.0;
    double sigma = 0.0;
    bool sigma_defaulted = false;
    std::array<Interval, 3> box{};
    std::array<int, 3> cells{};
    QuadRule rule = QuadRule::Midpoint;
    bool exclusion_auto = true;
    double exclusion = 0.0;
};

/// One parsed batch scenario. Parsing fills defaults and rejects unknown
/// keys; serialize() emits the canonical key-value document the digest and
/// the round-trip tests are defined on.
struct Scenario {
    Command command = Command::Greens;
    double wavelength = 0.0;
    std::uint64_t seed = 0;
    Convention convention = Convention::Gaussian;
    std::string output_prefix;

    TurbulenceConfig turb;

    // greens / rytov
    Point3 source{};
    Point3 observation{};
    std::uint64_t realizations = 0;

    // validity
    std::string profile_kind = "table31";  // table31 | constant | file
    double profile_cn = 0.0;
    std::string profile_file;
    std::vector<double> lengths_km;

    // time-reversal
    std::vector<MirrorElement> mirror_elements;
    Point3 tr_source{};
    std::array<double, 2> eval_y{};
    std::array<double, 2> eval_z{};
    std::array<int, 2> eval_counts{};
    std::string tr_mode = "single";  // single | mean | mc

    // apodize
    double ap_pupil_radius = 0.0;
    double ap_image_radius = 0.0;
    double ap_distance = 0.0;
    std::array<int, 2> pupil_nodes{16, 16};
    std::array<int, 2> image_nodes{16, 16};
    std::array<int, 3> slab_cells{8, 8, 8};
    double slab_halfwidth = 0.0;  // 0 = auto (4 max(a, b))

    std::string serialize() const;
    bool operator==(const Scenario& other) const {
        return serialize() == other.serialize();
    }
};

Scenario parse_scenario(const std::string& text);
Scenario parse_scenario_file(const std::filesystem::path& path);

struct ResultBundle {
    std::string digest;
    std::string version;
    std::vector<std::pair<std::string, std::string>> files;  // name -> bytes
    double wall_seconds = 0.0;
    bool from_cache = false;
};

/// Executes the scenario (or replays the cached payload when a cache
/// directory holds this digest) and returns the deterministic payload.
ResultBundle run_scenario(const Scenario& scenario,
                          const std::optional<std::filesystem::path>& cache_dir = {});

void write_bundle(const ResultBundle& bundle, const std::filesystem::path& out_dir);

std::string scenario_digest(const Scenario& scenario);

/// Shortest round-trippable decimal form, 17 significant digits,
/// locale independent.
std::string format_g17(double v);

const char* version_string();

}  // namespace rytov
