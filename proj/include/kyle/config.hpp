#ifndef KYLE_CONFIG_HPP
#define KYLE_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "kyle/examples.hpp"
#include "kyle/simulate.hpp"
#include "kyle/verify.hpp"

namespace kyle {

/// Config/usage problems map to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Experiment description, read from a strict JSON file: flat sections
 * (model / sim / verify / sweep / density / output), typed scalars, unknown
 * keys rejected. Every emitted file embeds the hash of the effective
 * configuration together with the master seed.
 */
struct ExperimentConfig {
    // model
    SignalKind kind = SignalKind::DeterministicVol;
    double gamma = 1.0;
    double q = 0.01;
    double Sigma = 0.1;
    double delta = 0.5, b = 0.0, d = 0.5;
    double base_C = 1.0, clock_v0 = 1.0;
    std::optional<double> tamper_w;  // diagnostic: constant weighting function

    // sim
    std::size_t n_paths = 1000;
    std::size_t n_steps = 1 << 14;  // grid nodes
    double epsilon = 9.5367431640625e-07;
    std::uint64_t seed = 20240801;
    Scheme scheme = Scheme::TransformedEuler;

    BatteryConfig battery;  // verify section; grid/seed/epsilon mirrored from sim

    std::string sweep_parameter = "gamma";
    std::vector<double> sweep_values;
    std::size_t sweep_paths = 5000;

    double dens_s = 0.0, dens_t = 1.0;
    std::vector<double> dens_x;  // defaults depend on the state interval
    double dens_y_min = 0.0, dens_y_max = 0.0;  // 0,0: derive from the model
    int dens_n_y = 161;

    std::string out_dir = "out";
    bool dump_paths = false;

    std::string config_hash;  // FNV-1a 64 of the effective configuration
};

/// Parses and validates a config file. Throws ConfigError on i/o, syntax,
/// unknown keys or bad values.
ExperimentConfig load_config(const std::string& path);

/// Config with defaults only (no file).
ExperimentConfig default_config();

/// Recomputes the effective-config hash; call after command-line overrides.
void refresh_hash(ExperimentConfig& cfg);

/// Serialized effective configuration (the hashed text).
std::string effective_config_text(const ExperimentConfig& cfg);

/// Builds the model/kernel/rule for the configured family.
/// AssumptionViolation propagates to the caller.
BuiltModel build_from_config(const ExperimentConfig& cfg);

/// The rule actually checked by cmd_validate/cmd_verify: the equilibrium rule
/// unless tamper_w is set.
PricingRule rule_for_checks(const ExperimentConfig& cfg, const BuiltModel& built);

}  // namespace kyle

#endif
