// Batch front end: `rytov run <scenario>` evaluates one scenario file and
// writes its deterministic payload; `rytov validate <scenario>` parses only.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "rytov/parallel.hpp"
#include "rytov/scenario.hpp"

namespace fs = std::filesystem;

namespace {

std::optional<fs::path> resolve_cache_dir(const std::string& flag_value,
                                          const fs::path& out_dir, bool enable) {
    if (!enable) return std::nullopt;
    if (const char* env = std::getenv("RYTOV_CACHE_DIR"); env && *env) {
        return fs::path(env);
    }
    if (!flag_value.empty()) return fs::path(flag_value);
    return out_dir / ".rytov-cache";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Green's functions of the 3-D Helmholtz equation in weakly "
                 "turbulent media: batch evaluator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = ".";
    std::string cache_flag;
    std::string convention;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    bool no_cache = false;

    auto* run = app.add_subcommand("run", "evaluate a scenario file");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory (default .)");
    run->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--convention", convention, "gaussian | paper")
        ->check(CLI::IsMember({"gaussian", "paper"}));
    run->add_option("--threads", threads, "worker threads (results are identical)")
        ->check(CLI::PositiveNumber);
    run->add_option("--cache-dir", cache_flag,
                    "cache directory (env RYTOV_CACHE_DIR wins)");
    run->add_flag("--no-cache", no_cache, "disable result caching");

    auto* validate = app.add_subcommand("validate", "parse and canonicalize only");
    validate->add_option("scenario", scenario_path, "scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        rytov::Scenario scenario = rytov::parse_scenario_file(scenario_path);
        if (seed_set) scenario.seed = seed;
        if (!convention.empty()) {
            scenario.convention = convention == "paper" ? rytov::Convention::Paper
                                                        : rytov::Convention::Gaussian;
        }
        if (validate->parsed()) {
            std::cout << scenario.serialize();
            std::cout << "digest = " << rytov::scenario_digest(scenario) << "\n";
            return 0;
        }

        rytov::set_thread_count(threads);
        const auto cache = resolve_cache_dir(cache_flag, out_dir, !no_cache);
        const auto bundle = rytov::run_scenario(scenario, cache);
        rytov::write_bundle(bundle, out_dir);
        std::cout << "digest = " << bundle.digest << "\n";
        for (const auto& [name, bytes] : bundle.files) {
            std::cout << "wrote " << (fs::path(out_dir) / name).string() << " ("
                      << bytes.size() << " bytes)\n";
        }
        std::fprintf(stdout, "wall_seconds = %.3f%s\n", bundle.wall_seconds,
                     bundle.from_cache ? " (cached)" : "");
        return 0;
    } catch (const rytov::ScenarioError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const rytov::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
