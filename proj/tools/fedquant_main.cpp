#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fedquant/commands.hpp"
#include "fedquant/config.hpp"
#include "fedquant/errors.hpp"

namespace {

fedquant::ExperimentSpec resolve_spec(const std::string& config_path, const std::string& preset) {
    if (!config_path.empty() && !preset.empty()) {
        throw fedquant::config_error("pass either a config file or --preset, not both");
    }
    if (!config_path.empty()) {
        return fedquant::load_config_file(config_path);
    }
    if (!preset.empty()) {
        return fedquant::load_preset(preset);
    }
    throw fedquant::config_error("a config file argument or --preset is required");
}

std::string resolve_out_dir(const std::string& flag, const fedquant::ExperimentSpec& spec) {
    if (!flag.empty()) return flag;
    if (!spec.out_dir.empty()) return spec.out_dir;
    const char* env = std::getenv("FEDQUANT_OUT_DIR");
    if (env != nullptr && *env != '\0') return env;
    return "out";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated averaging with quantised update uplink"};
    app.require_subcommand(1);

    std::string config_path;
    std::string preset;
    std::string out_flag;
    std::string axis;
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "JSON experiment config");
        cmd->add_option("--preset", preset,
                        "built-in config: synthetic-smoke, mnist-reference, dirichlet-sweep");
        cmd->add_option("--seed", seed, "override the experiment seed");
        cmd->add_option("--out-dir", out_flag,
                        "output directory (default: config out_dir, then $FEDQUANT_OUT_DIR, "
                        "then ./out)");
    };

    CLI::App* run = app.add_subcommand("run", "run the experiment, write metrics and summary");
    add_common(run);
    CLI::App* cost = app.add_subcommand("cost", "print the communication-cost table (no training)");
    add_common(cost);
    CLI::App* sweep = app.add_subcommand("sweep", "run a sweep axis, write aggregated results");
    add_common(sweep);
    sweep->add_option("--axis", axis, "sweep axis: alpha, levels or seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        fedquant::ExperimentSpec spec = resolve_spec(config_path, preset);
        if (run->count("--seed") > 0 || cost->count("--seed") > 0 || sweep->count("--seed") > 0) {
            spec.federation.seed = seed;
        }
        if (!axis.empty()) {
            if (axis != "alpha" && axis != "levels" && axis != "seeds") {
                throw fedquant::config_error("sweep.axis: must be one of alpha, levels, seeds");
            }
            spec.sweep.axis = axis;
        }
        const std::string out_dir = resolve_out_dir(out_flag, spec);
        if (run->parsed()) {
            return fedquant::cmd_run(spec, out_dir, std::cout);
        }
        if (cost->parsed()) {
            return fedquant::cmd_cost(spec, std::cout);
        }
        return fedquant::cmd_sweep(spec, out_dir, std::cout);
    } catch (const fedquant::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
