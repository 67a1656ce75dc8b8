/**
 * @file orbitlab_main.cpp
 * @brief Command-line front end: `orbitlab run ...` and `orbitlab presets`.
 *
 * Exit codes: 0 success, 1 unexpected failure, 2 usage error, 3 numerical
 * failure.
 */
#include "orbitlab/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw orbitlab::UsageError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run(const std::string& config_path, const std::string& preset, const orbitlab::ConfigOverrides& overrides) {
    std::string text;
    if (!preset.empty()) text = orbitlab::preset_config_text(orbitlab::find_preset(preset));
    if (!config_path.empty()) {
        if (!preset.empty()) throw orbitlab::UsageError("--config and --preset are mutually exclusive");
        text = read_text(config_path);
    }
    const auto cfg = orbitlab::parse_config(text, overrides);
    const auto result = orbitlab::run_experiment(cfg);
    std::cout << cfg.experiment << ": wrote " << result.artifacts.size() << " artifacts to " << cfg.out_dir.string()
              << " in " << orbitlab::format_number(result.seconds) << " s\n";
    for (const auto& a : result.artifacts) std::cout << "  " << a.string() << '\n';
    std::cout << "  " << result.manifest.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"orbitlab: stabilizers, orbits and autoencoders on plane figures"};
    app.set_version_flag("--version", std::string(orbitlab::kToolVersion));
    app.require_subcommand(1);

    std::string config_path, preset;
    std::vector<std::string> sets;
    std::string experiment, out_dir;
    std::uint64_t seed = 0;
    unsigned workers = 1;

    auto* run_cmd = app.add_subcommand("run", "run one experiment");
    run_cmd->add_option("--config,-c", config_path, "config file with `key = value` lines");
    run_cmd->add_option("--preset,-p", preset, "named preset (see `presets`)");
    auto* exp_opt = run_cmd->add_option("--experiment,-e", experiment, "experiment name");
    run_cmd->add_option("--set", sets, "override one parameter, key=value (repeatable)");
    auto* out_opt = run_cmd->add_option("--out,-o", out_dir, "output directory (default $ORBITLAB_OUT or ./out)");
    auto* seed_opt = run_cmd->add_option("--seed", seed, "master seed");
    auto* workers_opt = run_cmd->add_option("--workers,-j", workers, "worker threads (results do not depend on it)");

    auto* presets_cmd = app.add_subcommand("presets", "list presets");
    auto* exps_cmd = app.add_subcommand("experiments", "list experiments and their parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (presets_cmd->parsed()) {
            for (const auto& p : orbitlab::presets()) std::cout << p.name << "  (" << p.experiment << ")  " << p.description << '\n';
            return 0;
        }
        if (exps_cmd->parsed()) {
            for (const auto& e : orbitlab::experiment_catalog()) {
                std::cout << e.name << ": " << e.summary << '\n';
                for (const auto& p : e.params) std::cout << "    " << p.name << " = " << p.default_value << '\n';
            }
            return 0;
        }
        orbitlab::ConfigOverrides overrides;
        if (*exp_opt) overrides.experiment = experiment;
        overrides.sets = sets;
        if (*out_opt) overrides.out_dir = out_dir;
        if (*seed_opt) overrides.seed = seed;
        if (*workers_opt) overrides.workers = workers;
        return run(config_path, preset, overrides);
    } catch (const orbitlab::UsageError& e) {
        std::cerr << "orbitlab: usage error: " << e.what() << '\n';
        return 2;
    } catch (const orbitlab::NumericalError& e) {
        std::cerr << "orbitlab: numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "orbitlab: error: " << e.what() << '\n';
        return 1;
    }
}
