#ifndef KYLE_SIMULATE_HPP
#define KYLE_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include "kyle/grid.hpp"
#include "kyle/kernel.hpp"
#include "kyle/model.hpp"
#include "kyle/rng.hpp"
#include "kyle/strategy.hpp"

namespace kyle {

enum class Scheme { TransformedEuler, XiEuler, TransformedExactGaussian };

enum class PathError : std::uint8_t { None, StateEscape, DensityUnderflow, Explosion };

struct SimSpec {
    const SignalModel* model = nullptr;
    const BridgeKernel* kernel = nullptr;
    const PricingRule* rule = nullptr;
    Strategy strategy;
    TimeGrid grid;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::TransformedEuler;
    double explosion_bound = 1e6;
    std::vector<double> checkpoints;     // times at which (Z, xi) are recorded
    std::vector<double> window_bounds;   // times at which Y is recorded
};

/// Reduced per-path records, stored as columns indexed by path so results do
/// not depend on worker scheduling. Paths with error != None carry garbage in
/// the numeric columns and are excluded by good_column().
struct SimResult {
    std::size_t n_paths = 0;
    std::vector<double> checkpoint_times;
    std::vector<double> window_times;

    std::vector<PathError> error;
    std::vector<double> error_time;
    std::vector<double> xi_cp, z_cp, theta_cp;  // path-major blocks of checkpoint values
    std::vector<double> y_w;          // path-major blocks of Y at window bounds
    std::vector<double> xi_term, z_term, z1, theta_term;
    std::vector<double> wealth_direct, wealth_ibp;
    std::vector<double> int_p_db, int_p2_dt, sliver_bound;
    std::vector<double> jump_penalty_max;  // most positive block-cost gap D_t
    std::vector<double> psi0;              // psi^{Z1}(0, 0)
    std::vector<double> min_z, max_z, min_xi, max_xi, max_abs_r;

    std::size_t n_errors = 0;
    double exclusion_rate = 0.0;

    double xi_at(std::size_t path, std::size_t cp) const {
        return xi_cp[path * checkpoint_times.size() + cp];
    }
    double z_at(std::size_t path, std::size_t cp) const {
        return z_cp[path * checkpoint_times.size() + cp];
    }
    double theta_at(std::size_t path, std::size_t cp) const {
        return theta_cp[path * checkpoint_times.size() + cp];
    }
    double y_at(std::size_t path, std::size_t w) const {
        return y_w[path * window_times.size() + w];
    }
    bool good(std::size_t path) const { return error[path] == PathError::None; }

    /// Column restricted to healthy paths.
    std::vector<double> good_column(const std::vector<double>& col) const;
};

SimResult simulate_paths(const SimSpec& spec, std::size_t n_paths);

/// Full trajectory of one path (all state arrays on the spliced grid).
struct PathBundle {
    TimeGrid grid;
    std::vector<double> B, beta, Z, xi, Y, theta;  // post-event values per node
    struct JumpRecord {
        std::size_t node = 0;
        double time = 0.0, d_theta = 0.0, xi_pre = 0.0, xi_post = 0.0;
    };
    std::vector<JumpRecord> jumps;
    double z1 = 0.0;
    double wealth_direct = 0.0, wealth_ibp = 0.0;
    std::uint64_t master_seed = 0, path_index = 0;
    PathError error = PathError::None;
};

PathBundle simulate_bundle(const SimSpec& spec, std::uint64_t path_index);

/// Left-point gain sum over the recorded price path plus the terminal
/// settlement; recomputed from the bundle arrays (the in-loop accumulator in
/// simulate_paths follows the same convention, so the two must agree).
double wealth_direct(const PathBundle& bundle, const PricingRule& rule);

/// Settlement-gap form int (Z1 - xi - c) d theta, with block terms.
double wealth_ibp(const PathBundle& bundle, const PricingRule& rule);

/// Signal-only batch: terminal values and range per path.
struct SignalPathStats {
    std::vector<PathError> error;
    std::vector<double> z0, z_term, z1, min_z, max_z;
    std::size_t n_errors = 0;
};
SignalPathStats simulate_signal(const SignalModel& model, const BridgeKernel& kernel,
                                const TimeGrid& grid, std::uint64_t seed,
                                std::size_t n_paths);

/// Base diffusion on its own clock over [0, horizon]: terminal state and the
/// transformed value kappa = v(t, eta), for the h-function martingale check.
struct BaseEtaStats {
    std::vector<PathError> error;
    std::vector<double> eta_term, kappa_term;
    std::size_t n_errors = 0;
};
BaseEtaStats simulate_base_eta(const BridgeKernel& kernel, const TimeGrid& grid,
                               std::uint64_t seed, std::size_t n_paths);

/// Worker-pool size: KYLE_WORKERS when set, else the hardware concurrency.
unsigned worker_count();

}  // namespace kyle

#endif
