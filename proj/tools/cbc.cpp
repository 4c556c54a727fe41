#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cbc/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Control-based continuation of equilibria and periodic orbits"};
    app.require_subcommand(1);

    std::string config_path;
    cbc::CliOptions options;
    std::uint64_t seed = 0;
    bool seed_set = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", options.out_dir, "output directory override");
        sub->add_flag("--dump-traces", options.dump_traces, "write per-sample time series");
        sub->add_option("--seed", seed, "plant RNG seed override")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* eq = app.add_subcommand("equilibrium", "trace an equilibrium branch through a fold");
    auto* branch = app.add_subcommand("branch", "amplitude sweep at one forcing frequency");
    auto* surface = app.add_subcommand("surface", "full frequency sweep with surface extraction");
    auto* compare = app.add_subcommand("compare", "fixed-point vs pseudo-arclength corrector");
    for (auto* sub : {eq, branch, surface, compare}) {
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Bad command lines are validation failures (exit 2); --help is 0.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (seed_set) {
        options.seed = seed;
    }

    try {
        const cbc::RunConfig config = cbc::load_config(config_path);
        if (eq->parsed()) {
            return cbc::cmd_equilibrium(config, options);
        }
        if (branch->parsed()) {
            return cbc::cmd_branch(config, options);
        }
        if (surface->parsed()) {
            return cbc::cmd_surface(config, options);
        }
        return cbc::cmd_compare(config, options);
    } catch (const cbc::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
