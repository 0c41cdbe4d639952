#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "kyle/commands.hpp"
#include "kyle/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Kyle-Back equilibrium simulation and verification toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, only;
    std::uint64_t seed = 0;
    std::size_t paths = 0, steps = 0;
    double epsilon = 0.0;
    bool dump_paths = false;

    app.add_option("--config", config_path, "JSON experiment configuration");
    app.add_option("--seed", seed, "override master seed");
    app.add_option("--out", out_dir, "override output directory");
    app.add_option("--paths", paths, "override path count");
    app.add_option("--steps", steps, "override grid node count");
    app.add_option("--epsilon", epsilon, "override terminal cutoff");
    app.add_flag("--dump-paths", dump_paths, "write the per-path CSV dump");
    app.add_option("--only", only, "restrict verify to one named check");

    auto* validate = app.add_subcommand("validate", "check the model and rule assumptions");
    auto* simulate = app.add_subcommand("simulate", "equilibrium paths and summary moments");
    auto* verify = app.add_subcommand("verify", "full equilibrium verification battery");
    auto* sweep = app.add_subcommand("sweep", "risk-aversion sweep");
    auto* density = app.add_subcommand("density", "tabulate transition densities");
    for (auto* sub : {validate, simulate, verify, sweep, density}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        kyle::ExperimentConfig cfg =
            config_path.empty() ? kyle::default_config() : kyle::load_config(config_path);
        if (app.count("--seed")) {
            cfg.seed = seed;
            cfg.battery.seed = seed;
        }
        if (app.count("--out")) cfg.out_dir = out_dir;
        if (app.count("--paths")) cfg.n_paths = paths;
        if (app.count("--steps")) {
            cfg.n_steps = steps;
            cfg.battery.grid_nodes = steps;
        }
        if (app.count("--epsilon")) {
            cfg.epsilon = epsilon;
            cfg.battery.epsilon = epsilon;
        }
        if (dump_paths) cfg.dump_paths = true;
        if (!only.empty()) cfg.battery.only = {only};
        kyle::refresh_hash(cfg);

        if (validate->parsed()) return kyle::cmd_validate(cfg);
        if (simulate->parsed()) return kyle::cmd_simulate(cfg);
        if (verify->parsed()) return kyle::cmd_verify(cfg);
        if (sweep->parsed()) return kyle::cmd_sweep(cfg);
        if (density->parsed()) return kyle::cmd_density(cfg);
        return 2;
    } catch (const kyle::ConfigError& ex) {
        std::fprintf(stderr, "%s\n", ex.what());
        return 2;
    } catch (const kyle::InvalidParameter& ex) {
        std::fprintf(stderr, "%s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
}
