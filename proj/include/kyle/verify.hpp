#ifndef KYLE_VERIFY_HPP
#define KYLE_VERIFY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kyle/examples.hpp"
#include "kyle/report.hpp"
#include "kyle/simulate.hpp"

namespace kyle {

struct BatteryConfig {
    std::size_t paths_major = 100000;  // pricing / flow / optimality / admissibility runs
    std::size_t paths_bridge = 1000;
    std::size_t grid_nodes = 1 << 14;
    double epsilon = 9.5367431640625e-07;  // 2^-20
    std::uint64_t seed = 20240801;

    std::vector<double> checkpoints = {0.25, 0.5, 0.75};
    std::size_t n_bins = 20;
    std::vector<double> window_bounds = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<double> bridge_epsilons = {0.00390625, 0.000244140625, 1.52587890625e-05};

    double z_threshold = 3.0;
    double z_threshold_heavy = 5.0;
    double ks_pvalue_min = 0.01;
    double bridge_ratio_min = 1.5;
    double bridge_final_rms = 0.05;
    double jump_penalty_tol = 1e-10;
    double exclusion_max = 1e-3;
    double kurtosis_warn = 10.0;

    double density_norm_tol = 1e-6;
    double density_ck_tol = 1e-6;
    double density_score_tol = 1e-8;
    double density_oracle_tol = 1e-6;

    // static-family invariance check
    bool run_static_invariance = false;
    double invariance_alt_v0 = 0.5;
    std::size_t paths_invariance = 100000;
    std::size_t invariance_nodes = 1 << 13;

    std::vector<std::string> only;  // empty: run everything
};

/// Conditional-mean test of Z_t - xi_t inside equal-mass xi_t bins at each
/// checkpoint. estimate is the worst bin |mean|/SE; passes when it stays
/// under the z threshold.
CheckEntry verify_rational_pricing(const SimResult& run, std::size_t n_bins, double z_threshold,
                                   std::string name, bool expect_fail);

/// Standardized disjoint-window increments of the total order flow: mean,
/// variance, normal KS distance and adjacent-window serial correlation.
CheckEntry verify_order_flow_brownian(const SimResult& run, double z_threshold,
                                      double ks_pvalue_min, std::string name, bool expect_fail);

/// Terminal price-signal gap across shrinking cutoffs: strictly decreasing
/// RMS, consecutive ratios above the floor, final RMS under the cap.
CheckEntry verify_bridge_convergence(const BuiltModel& built, const BatteryConfig& cfg);

/// Expected-utility dominance of the equilibrium strategy over the supplied
/// deviations (common random numbers), the value identity against
/// psi^{Z1}(0, .), and the pathwise block-cost bound.
CheckEntry verify_optimality(const SimResult& eq, const std::vector<const SimResult*>& devs,
                             const std::vector<std::string>& dev_names, double gamma,
                             const BatteryConfig& cfg);

/// Unit-expectation checks: the exponential weight along equilibrium paths
/// and the reciprocal h-function along base-diffusion paths.
CheckEntry verify_admissibility(const SimResult& eq, const BuiltModel& built,
                                const BatteryConfig& cfg);

/// Quadrature residuals: normalization, Chapman-Kolmogorov, zero-mean score,
/// and (when the Gaussian closed form applies) the h-transform equivalence.
CheckEntry verify_density_identities(const BuiltModel& built,
                                     const std::optional<DeterministicOracles>& oracle,
                                     const BatteryConfig& cfg);

struct InvarianceResult {
    double mean_diff = 0.0;
    double se_diff = 0.0;
    double u_hat_a = 0.0, u_hat_b = 0.0;
    std::size_t n_paths = 0;
};

/// Equilibrium value comparison between two clock choices over the same base
/// diffusion; the base-noise increments and the order-flow noise are shared
/// path by path.
InvarianceResult static_v_invariance(const StaticSpec& spec, double v0_a, double v0_b,
                                     std::size_t n_paths, std::size_t grid_nodes, double epsilon,
                                     std::uint64_t seed);

CheckEntry verify_static_v_invariance(const StaticSpec& spec, const BatteryConfig& cfg);

/// Full battery: assumptions, equilibrium run and its statistical tests,
/// negative controls, deviations, bridge, densities and (for the static
/// family) the clock-invariance check.
VerificationReport run_battery(const BuiltModel& built, const BatteryConfig& cfg);

/// Equilibrium mean utility of -(1/gamma) exp(-gamma W1).
double mean_utility(const std::vector<double>& wealth, double gamma);

}  // namespace kyle

#endif
