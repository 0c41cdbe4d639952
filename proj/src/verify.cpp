#include "kyle/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kyle/errors.hpp"
#include "kyle/numerics.hpp"
#include "kyle/stats.hpp"
#include "kyle/validate.hpp"

namespace kyle {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

SimSpec battery_sim_spec(const BuiltModel& built, const BatteryConfig& cfg, Strategy strategy,
                         const TimeGrid& grid) {
    SimSpec spec;
    spec.model = &built.model;
    spec.kernel = built.kernel.get();
    spec.rule = &built.rule;
    spec.strategy = std::move(strategy);
    spec.grid = grid;
    spec.seed = cfg.seed;
    spec.checkpoints = cfg.checkpoints;
    spec.window_bounds = cfg.window_bounds;
    return spec;
}

std::vector<double> utilities(const std::vector<double>& wealth, double gamma) {
    std::vector<double> u(wealth.size());
    for (std::size_t i = 0; i < wealth.size(); ++i)
        u[i] = -std::exp(-gamma * wealth[i]) / gamma;
    return u;
}

}  // namespace

double mean_utility(const std::vector<double>& wealth, double gamma) {
    return summarize(utilities(wealth, gamma)).mean;
}

CheckEntry verify_rational_pricing(const SimResult& run, std::size_t n_bins, double z_threshold,
                                   std::string name, bool expect_fail) {
    CheckEntry e;
    e.name = std::move(name);
    e.expect_fail = expect_fail;
    e.tolerance = z_threshold;
    if (run.checkpoint_times.empty()) throw InvalidParameter("rational pricing: no checkpoints");

    double worst = 0.0;
    std::ostringstream detail;
    long n_good = 0;
    for (std::size_t cp = 0; cp < run.checkpoint_times.size(); ++cp) {
        std::vector<double> keys, gaps;
        keys.reserve(run.n_paths);
        gaps.reserve(run.n_paths);
        for (std::size_t i = 0; i < run.n_paths; ++i) {
            if (!run.good(i)) continue;
            keys.push_back(run.xi_at(i, cp));
            gaps.push_back(run.z_at(i, cp) - run.xi_at(i, cp));
        }
        n_good = static_cast<long>(keys.size());
        if (keys.size() < 50 * n_bins)
            throw InsufficientPaths("rational pricing: too few paths for the bin count");
        double cp_worst = 0.0;
        for (const auto& bin : equal_mass_bins(keys, gaps, n_bins)) {
            const double z = bin.se > 0.0 ? std::abs(bin.mean) / bin.se : 0.0;
            cp_worst = std::max(cp_worst, z);
        }
        const auto global = summarize(gaps);
        if (global.se_mean > 0.0)
            cp_worst = std::max(cp_worst, std::abs(global.mean) / global.se_mean);
        worst = std::max(worst, cp_worst);
        detail << "t=" << run.checkpoint_times[cp] << " worst|z|=" << fmt(cp_worst) << "; ";
    }
    e.estimate = worst;
    e.pass = worst <= z_threshold;
    e.n = n_good;
    e.detail = detail.str();
    return e;
}

CheckEntry verify_order_flow_brownian(const SimResult& run, double z_threshold,
                                      double ks_pvalue_min, std::string name, bool expect_fail) {
    CheckEntry e;
    e.name = std::move(name);
    e.expect_fail = expect_fail;
    e.tolerance = z_threshold;
    const std::size_t nw = run.window_times.size();
    if (nw < 3) throw InvalidParameter("order flow: need at least two windows");

    // standardized increments per window; deviations of a mis-scaled strategy
    // change sign across windows and cancel in a pooled statistic, so the
    // mean/variance/serial checks are applied window by window
    const std::size_t n_inc = nw - 1;
    std::vector<std::vector<double>> inc(n_inc);
    std::vector<double> pooled;
    for (std::size_t i = 0; i < run.n_paths; ++i) {
        if (!run.good(i)) continue;
        for (std::size_t j = 0; j < n_inc; ++j) {
            const double dt = run.window_times[j + 1] - run.window_times[j];
            const double x = (run.y_at(i, j + 1) - run.y_at(i, j)) / std::sqrt(dt);
            inc[j].push_back(x);
            pooled.push_back(x);
        }
    }
    if (pooled.size() < 100) throw InsufficientPaths("order flow: too few increments");

    double z_mean = 0.0, z_var = 0.0, z_serial = 0.0;
    for (std::size_t j = 0; j < n_inc; ++j) {
        const auto s = summarize(inc[j]);
        const double m = static_cast<double>(inc[j].size());
        z_mean = std::max(z_mean, std::abs(s.mean) / std::sqrt(s.variance / m));
        z_var = std::max(z_var, std::abs(s.variance - 1.0) / std::sqrt(2.0 / (m - 1.0)));
        if (j > 0) {
            const double r = correlation(inc[j - 1], inc[j]);
            z_serial = std::max(z_serial, std::abs(r) * std::sqrt(m));
        }
    }
    const double ks = ks_statistic_normal(pooled);
    const double pval = ks_pvalue(pooled.size(), ks);

    e.estimate = std::max({z_mean, z_var, z_serial});
    e.pass = z_mean <= z_threshold && z_var <= z_threshold && z_serial <= z_threshold &&
             pval > ks_pvalue_min;
    e.n = static_cast<long>(pooled.size());
    std::ostringstream detail;
    detail << "max over " << n_inc << " windows: z_mean=" << fmt(z_mean)
           << " z_var=" << fmt(z_var) << " z_serial=" << fmt(z_serial) << "; pooled ks_p="
           << fmt(pval);
    e.detail = detail.str();
    return e;
}

CheckEntry verify_bridge_convergence(const BuiltModel& built, const BatteryConfig& cfg) {
    CheckEntry e;
    e.name = "bridge";
    e.tolerance = cfg.bridge_ratio_min;

    std::vector<double> rms_levels;
    for (double eps : cfg.bridge_epsilons) {
        const auto grid = make_grid(eps, cfg.grid_nodes, GridRefinement::GeometricTowardOne);
        if (!(grid.dt(grid.steps() - 1) > 0.0))
            throw StepResolution("bridge: grid cannot resolve the cutoff");
        SimSpec spec;
        spec.model = &built.model;
        spec.kernel = built.kernel.get();
        spec.rule = &built.rule;
        spec.strategy = Strategy::equilibrium();
        spec.grid = grid;
        spec.seed = cfg.seed;
        const auto run = simulate_paths(spec, cfg.paths_bridge);
        KahanSum acc;
        std::size_t n_good = 0;
        for (std::size_t i = 0; i < run.n_paths; ++i) {
            if (!run.good(i)) continue;
            const double d = run.xi_term[i] - run.z_term[i];
            acc.add(d * d);
            ++n_good;
        }
        if (n_good == 0) throw InsufficientPaths("bridge: no healthy paths");
        rms_levels.push_back(std::sqrt(acc.value() / static_cast<double>(n_good)));
    }

    std::ostringstream detail;
    detail << "rms:";
    for (double r : rms_levels) detail << " " << fmt(r);
    if (rms_levels.size() < 2) {
        e.pass = true;
        e.estimate = 0.0;
        e.detail = detail.str() + " (insufficient levels: ratio test vacuous)";
        e.n = static_cast<long>(cfg.paths_bridge);
        return e;
    }
    bool decreasing = true;
    double min_ratio = 1e300;
    for (std::size_t i = 0; i + 1 < rms_levels.size(); ++i) {
        if (!(rms_levels[i + 1] < rms_levels[i])) decreasing = false;
        min_ratio = std::min(min_ratio, rms_levels[i] / rms_levels[i + 1]);
    }
    const double final_rms = rms_levels.back();
    e.estimate = min_ratio;
    e.pass = decreasing && min_ratio >= cfg.bridge_ratio_min && final_rms < cfg.bridge_final_rms;
    e.n = static_cast<long>(cfg.paths_bridge);
    detail << " min_ratio=" << fmt(min_ratio) << " final=" << fmt(final_rms);
    e.detail = detail.str();
    return e;
}

CheckEntry verify_optimality(const SimResult& eq, const std::vector<const SimResult*>& devs,
                             const std::vector<std::string>& dev_names, double gamma,
                             const BatteryConfig& cfg) {
    CheckEntry e;
    e.name = "optimality";

    // keep paths paired: drop indices that errored in any strategy run
    std::vector<bool> good(eq.n_paths, true);
    for (std::size_t i = 0; i < eq.n_paths; ++i) {
        if (!eq.good(i)) good[i] = false;
        for (const auto* d : devs)
            if (!d->good(i)) good[i] = false;
    }

    std::vector<double> w_eq;
    w_eq.reserve(eq.n_paths);
    for (std::size_t i = 0; i < eq.n_paths; ++i)
        if (good[i]) w_eq.push_back(eq.wealth_direct[i]);
    if (w_eq.size() < 100) throw InsufficientPaths("optimality: too few paired paths");
    const auto u_eq = utilities(w_eq, gamma);
    const auto u_eq_stats = summarize(u_eq);
    const bool heavy = u_eq_stats.kurtosis > cfg.kurtosis_warn;
    const double zt = heavy ? cfg.z_threshold_heavy : cfg.z_threshold;
    e.tolerance = zt;

    std::ostringstream detail;
    detail << "U_eq=" << fmt(u_eq_stats.mean) << "+-" << fmt(u_eq_stats.se_mean);
    if (heavy) detail << " [heavy-tail: widened threshold]";

    double worst = 0.0;
    bool pass = true;
    for (std::size_t d = 0; d < devs.size(); ++d) {
        std::vector<double> diff;
        diff.reserve(w_eq.size());
        std::size_t row = 0;
        for (std::size_t i = 0; i < eq.n_paths; ++i) {
            if (!good[i]) continue;
            const double ud = -std::exp(-gamma * devs[d]->wealth_direct[i]) / gamma;
            diff.push_back(u_eq[row] - ud);
            ++row;
        }
        const auto ds = summarize(diff);
        const double z = ds.se_mean > 0.0 ? ds.mean / ds.se_mean : 0.0;
        // dominance: the paired mean may not be significantly negative
        if (z < -zt) pass = false;
        worst = std::max(worst, std::max(0.0, -z));
        detail << " dU[" << dev_names[d] << "]=" << fmt(ds.mean) << " z=" << fmt(z) << ";";

        double max_penalty = 0.0;
        bool has_jumps = false;
        for (std::size_t i = 0; i < eq.n_paths; ++i) {
            if (!good[i]) continue;
            if (devs[d]->jump_penalty_max[i] != 0.0) has_jumps = true;
            max_penalty = std::max(max_penalty, devs[d]->jump_penalty_max[i]);
        }
        if (has_jumps) {
            detail << " maxD[" << dev_names[d] << "]=" << fmt(max_penalty) << ";";
            if (max_penalty > cfg.jump_penalty_tol) pass = false;
        }
    }

    // value identity against the pathwise settlement potential
    std::vector<double> vdiff;
    vdiff.reserve(w_eq.size());
    std::size_t row = 0;
    for (std::size_t i = 0; i < eq.n_paths; ++i) {
        if (!good[i]) continue;
        const double v = -std::exp(-gamma * eq.psi0[i]) / gamma;
        vdiff.push_back(u_eq[row] - v);
        ++row;
    }
    const auto vs = summarize(vdiff);
    const double zv = vs.se_mean > 0.0 ? std::abs(vs.mean) / vs.se_mean : 0.0;
    if (zv > zt) pass = false;
    worst = std::max(worst, zv);
    detail << " value_z=" << fmt(zv);

    e.estimate = worst;
    e.pass = pass;
    e.n = static_cast<long>(w_eq.size());
    e.detail = detail.str();
    return e;
}

CheckEntry verify_admissibility(const SimResult& eq, const BuiltModel& built,
                                const BatteryConfig& cfg) {
    CheckEntry e;
    e.name = "admissibility";
    const double gamma = built.model.gamma;
    e.tolerance = cfg.z_threshold_heavy;

    std::vector<double> weights, sliver_effect;
    weights.reserve(eq.n_paths);
    for (std::size_t i = 0; i < eq.n_paths; ++i) {
        if (!eq.good(i)) continue;
        const double x =
            std::exp(-gamma * eq.int_p_db[i] - 0.5 * gamma * gamma * eq.int_p2_dt[i]);
        weights.push_back(x);
        sliver_effect.push_back(x * (std::exp(eq.sliver_bound[i]) - 1.0));
    }
    const auto ws = summarize(weights);
    const double sliver = summarize(sliver_effect).mean;
    const double slack = cfg.z_threshold_heavy * ws.se_mean + sliver;
    const bool pass_dd = std::abs(ws.mean - 1.0) <= slack;

    // reciprocal h-function along base-diffusion paths
    const bool affine = built.model.has_affine();
    const auto grid = affine
                          ? make_grid(cfg.epsilon, 256, GridRefinement::GeometricTowardOne)
                          : make_grid(cfg.epsilon, 2048, GridRefinement::Uniform);
    const std::size_t n_eta = std::min<std::size_t>(eq.n_paths, 30000);
    const auto eta = simulate_base_eta(*built.kernel, grid, cfg.seed, n_eta);
    std::vector<double> recip;
    recip.reserve(n_eta);
    const double horizon = grid.horizon();
    for (std::size_t i = 0; i < n_eta; ++i) {
        if (eta.error[i] != PathError::None) continue;
        recip.push_back(std::exp(-built.kernel->log_u(horizon, eta.kappa_term[i])));
    }
    const auto ms = summarize(recip);
    const bool pass_u = std::abs(ms.mean - 1.0) <= cfg.z_threshold_heavy * ms.se_mean;

    const double z_dd = ws.se_mean > 0.0
                            ? std::abs(ws.mean - 1.0) /
                                  (ws.se_mean + sliver / cfg.z_threshold_heavy)
                            : 0.0;
    const double z_u = ms.se_mean > 0.0 ? std::abs(ms.mean - 1.0) / ms.se_mean : 0.0;
    e.estimate = std::max(z_dd, z_u);
    e.uncertainty = ws.se_mean;
    e.pass = pass_dd && pass_u;
    e.n = static_cast<long>(weights.size());
    std::ostringstream detail;
    detail << "E[weight]=" << fmt(ws.mean) << "+-" << fmt(ws.se_mean) << " sliver=" << fmt(sliver)
           << " kurtosis=" << fmt(ws.kurtosis) << " E[1/u]=" << fmt(ms.mean) << "+-"
           << fmt(ms.se_mean);
    if (ws.kurtosis > cfg.kurtosis_warn) detail << " [heavy-tail]";
    e.detail = detail.str();
    return e;
}

CheckEntry verify_density_identities(const BuiltModel& built,
                                     const std::optional<DeterministicOracles>& oracle,
                                     const BatteryConfig& cfg) {
    CheckEntry e;
    e.name = "density";
    const auto& k = *built.kernel;
    const auto& I = built.model.state_interval;
    const double span_lo = std::isinf(I.lo) ? -1.0 : 0.5 * I.lo;
    const double span_hi = std::isinf(I.hi) ? 1.0 : 0.5 * I.hi;
    const std::vector<double> xs{span_lo, 0.0, span_hi};

    const QuadratureOptions qopt{1e-12, 1'000'000};
    double norm_resid = 0.0, ck_resid = 0.0, score_resid = 0.0, oracle_resid = 0.0;

    const std::vector<std::pair<double, double>> spans{{0.0, 0.5}, {0.5, 1.0}, {0.0, 1.0}};
    for (const auto& [s, t] : spans) {
        for (double x : xs) {
            double lo, hi;
            k.p_window(s, x, t, lo, hi);
            const double mass =
                integrate([&](double y) { return k.density_p(s, x, t, y); }, lo, hi, qopt);
            norm_resid = std::max(norm_resid, std::abs(mass - 1.0));
        }
    }
    for (double y : xs) {
        double lo1, hi1, lo2, hi2;
        k.p_window(0.0, 0.0, 0.5, lo1, hi1);
        k.p_window(0.5, y, 1.0, lo2, hi2);
        const double chain = integrate(
            [&](double m2) {
                return k.density_p(0.0, 0.0, 0.5, m2) * k.density_p(0.5, m2, 1.0, y);
            },
            std::min(lo1, lo2 - 5.0), std::max(hi1, hi2 + 5.0), qopt);
        ck_resid = std::max(ck_resid, std::abs(chain - k.density_p(0.0, 0.0, 1.0, y)));
    }
    for (double t : {0.25, 0.5}) {
        const double Vt = built.model.V(t);
        for (double x : xs) {
            double lo, hi;
            k.p_window(t, x, Vt, lo, hi);
            const double mean_score = integrate(
                [&](double y) { return k.density_p(t, x, Vt, y) * k.score_p(t, x, Vt, y); }, lo,
                hi, qopt);
            score_resid = std::max(score_resid, std::abs(mean_score));
        }
    }
    if (oracle) {
        for (const auto& [s, t] : spans) {
            for (double y : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
                for (double z : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
                    const double want = oracle->rho(s, y, t, z);
                    if (want < 1e-30) continue;
                    const double got = k.density_rho(s, y, t, z);
                    oracle_resid = std::max(oracle_resid, std::abs(got - want) / want);
                }
            }
        }
    }

    const double worst_ratio =
        std::max({norm_resid / cfg.density_norm_tol, ck_resid / cfg.density_ck_tol,
                  score_resid / cfg.density_score_tol,
                  oracle ? oracle_resid / cfg.density_oracle_tol : 0.0});
    e.estimate = worst_ratio;
    e.tolerance = 1.0;
    e.pass = worst_ratio < 1.0;
    std::ostringstream detail;
    detail << "norm=" << fmt(norm_resid) << " ck=" << fmt(ck_resid)
           << " score=" << fmt(score_resid);
    if (oracle) detail << " gauss_rel=" << fmt(oracle_resid);
    e.detail = detail.str();
    return e;
}

InvarianceResult static_v_invariance(const StaticSpec& spec, double v0_a, double v0_b,
                                     std::size_t n_paths, std::size_t grid_nodes, double epsilon,
                                     std::uint64_t seed) {
    if (n_paths < 2) throw InsufficientPaths("static invariance: need at least 2 paths");
    const auto built_a = build_static(spec, v0_a);
    const auto built_b = build_static(spec, v0_b);
    const auto grid = make_grid(epsilon, grid_nodes, GridRefinement::GeometricTowardOne);
    const std::size_t n = grid.size();
    const double gamma = spec.gamma;
    const double C = spec.base_C;

    // combined base-clock times: every V(t_k) of both choices, a pre-grid below
    // the smaller initial clock value, and the settlement time 1
    std::vector<double> eta_times{0.0, 1.0};
    const double v0_min = std::min(built_a.model.v0, built_b.model.v0);
    for (int j = 1; j <= 64; ++j) eta_times.push_back(v0_min * j / 64.0);
    for (std::size_t kk = 0; kk < n; ++kk) {
        eta_times.push_back(built_a.model.V(grid.nodes[kk]));
        eta_times.push_back(built_b.model.V(grid.nodes[kk]));
    }
    std::sort(eta_times.begin(), eta_times.end());
    eta_times.erase(std::unique(eta_times.begin(), eta_times.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                    eta_times.end());
    const std::size_t m = eta_times.size();

    const auto eta_index = [&](double s) {
        const auto it = std::lower_bound(eta_times.begin(), eta_times.end(), s - 1e-12);
        return static_cast<std::size_t>(it - eta_times.begin());
    };

    struct ChoiceCtx {
        std::vector<std::size_t> map;  // xi-grid node -> eta-grid node of V(t_k)
        std::vector<double> Vmt, gVC, inv_gtC;
    };
    ChoiceCtx ctx[2];
    const BuiltModel* builds[2] = {&built_a, &built_b};
    for (int c2 = 0; c2 < 2; ++c2) {
        auto& cc = ctx[c2];
        cc.map.resize(n);
        cc.Vmt.resize(n);
        cc.gVC.resize(n);
        cc.inv_gtC.resize(n);
        for (std::size_t kk = 0; kk < n; ++kk) {
            const double Vk = builds[c2]->model.V(grid.nodes[kk]);
            cc.map[kk] = eta_index(Vk);
            cc.Vmt[kk] = Vk - grid.nodes[kk];
            cc.gVC[kk] = gamma * Vk + C;
            cc.inv_gtC[kk] = 1.0 / (gamma * grid.nodes[kk] + C);
        }
    }

    std::vector<double> eta_sd(m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double g = (eta_times[j + 1] - eta_times[j]) /
                         ((gamma * eta_times[j] + C) * (gamma * eta_times[j + 1] + C));
        eta_sd[j] = std::sqrt(g);
    }

    std::vector<double> u_val[2];
    u_val[0].resize(n_paths);
    u_val[1].resize(n_paths);
    std::vector<double> eta_prefix(m);
    std::vector<double> dB(n - 1);
    for (std::size_t i = 0; i < n_paths; ++i) {
        NormalStream zs(seed, i, 0);
        NormalStream bs(seed, i, 1);
        eta_prefix[0] = 0.0;
        for (std::size_t j = 0; j + 1 < m; ++j)
            eta_prefix[j + 1] = eta_prefix[j] + eta_sd[j] * zs.next_normal();
        for (std::size_t kk = 0; kk + 1 < n; ++kk)
            dB[kk] = std::sqrt(grid.dt(kk)) * bs.next_normal();
        const double z1 = eta_prefix[m - 1];  // shared settlement value

        for (int c2 = 0; c2 < 2; ++c2) {
            const auto& cc = ctx[c2];
            double R = 0.0, xi = 0.0, th = 0.0, w_acc = 0.0;
            for (std::size_t kk = 0; kk + 1 < n; ++kk) {
                const double Zk = eta_prefix[cc.map[kk]];
                const double U = cc.gVC[kk] * Zk;  // v(V(t_k), Z_k)
                const double pull = (U - R) / cc.Vmt[kk];
                const double alpha = pull - gamma * xi;
                const double dt = grid.dt(kk);
                R += dB[kk] + pull * dt;
                const double xi_new = R * cc.inv_gtC[kk + 1];
                w_acc += th * (xi_new - xi);
                th += alpha * dt;
                xi = xi_new;
            }
            w_acc += (z1 - xi) * th;
            u_val[c2][i] = -std::exp(-gamma * w_acc) / gamma;
        }
    }

    InvarianceResult out;
    out.n_paths = n_paths;
    out.u_hat_a = summarize(u_val[0]).mean;
    out.u_hat_b = summarize(u_val[1]).mean;
    std::vector<double> diff(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) diff[i] = u_val[0][i] - u_val[1][i];
    const auto ds = summarize(diff);
    out.mean_diff = ds.mean;
    out.se_diff = ds.se_mean;
    return out;
}

CheckEntry verify_static_v_invariance(const StaticSpec& spec, const BatteryConfig& cfg) {
    CheckEntry e;
    e.name = "static_invariance";
    e.tolerance = cfg.z_threshold;
    const auto res = static_v_invariance(spec, 1.0, cfg.invariance_alt_v0, cfg.paths_invariance,
                                         cfg.invariance_nodes, cfg.epsilon, cfg.seed);
    const double z = res.se_diff > 0.0 ? std::abs(res.mean_diff) / res.se_diff : 0.0;
    e.estimate = z;
    e.uncertainty = res.se_diff;
    e.pass = z <= cfg.z_threshold;
    e.n = static_cast<long>(res.n_paths);
    std::ostringstream detail;
    detail << "U[V=1]=" << fmt(res.u_hat_a) << " U[v0=" << cfg.invariance_alt_v0
           << "]=" << fmt(res.u_hat_b) << " diff=" << fmt(res.mean_diff) << "+-"
           << fmt(res.se_diff);
    e.detail = detail.str();
    return e;
}

VerificationReport run_battery(const BuiltModel& built, const BatteryConfig& cfg) {
    VerificationReport report;
    report.master_seed = cfg.seed;
    const auto want = [&](const std::string& name) {
        if (cfg.only.empty()) return true;
        for (const auto& o : cfg.only)
            if (name == o || name.rfind(o + ".", 0) == 0) return true;
        return false;
    };

    if (want("assumptions")) {
        auto val = validate_assumptions(built.model, built.rule);
        for (auto& entry : val.entries) {
            entry.name = "assumptions." + entry.name;
            report.add(entry);
        }
    }

    const bool need_eq = want("rational_pricing") || want("brownian") || want("optimality") ||
                         want("admissibility") || want("exclusion_rate");
    const bool need_zero = want("rational_pricing_negative_control") || want("optimality");
    const bool need_k2 = want("brownian_negative_control") || want("optimality");
    const bool need_k05 = want("optimality");
    const bool need_jump = want("optimality");

    const auto grid = make_grid(cfg.epsilon, cfg.grid_nodes, GridRefinement::GeometricTowardOne);
    std::optional<SimResult> eq, zero, k2, k05, jump;
    if (need_eq)
        eq = simulate_paths(battery_sim_spec(built, cfg, Strategy::equilibrium(), grid),
                            cfg.paths_major);
    if (need_zero)
        zero = simulate_paths(battery_sim_spec(built, cfg, Strategy::zero(), grid),
                              cfg.paths_major);
    if (need_k2)
        k2 = simulate_paths(battery_sim_spec(built, cfg, Strategy::scaled(2.0), grid),
                            cfg.paths_major);
    if (need_k05)
        k05 = simulate_paths(battery_sim_spec(built, cfg, Strategy::scaled(0.5), grid),
                             cfg.paths_major);
    if (need_jump)
        jump = simulate_paths(battery_sim_spec(built, cfg, Strategy::jump(0.5, 0.5), grid),
                              cfg.paths_major);

    if (want("rational_pricing"))
        report.add(verify_rational_pricing(*eq, cfg.n_bins, cfg.z_threshold, "rational_pricing",
                                           false));
    if (want("rational_pricing_negative_control"))
        report.add(verify_rational_pricing(*zero, cfg.n_bins, cfg.z_threshold,
                                           "rational_pricing_negative_control", true));
    if (want("brownian"))
        report.add(
            verify_order_flow_brownian(*eq, cfg.z_threshold, cfg.ks_pvalue_min, "brownian", false));
    if (want("brownian_negative_control"))
        report.add(verify_order_flow_brownian(*k2, cfg.z_threshold, cfg.ks_pvalue_min,
                                              "brownian_negative_control", true));
    if (want("optimality"))
        report.add(verify_optimality(*eq, {&*zero, &*k05, &*k2, &*jump},
                                     {"zero", "k0.5", "k2", "jump"}, built.model.gamma, cfg));
    if (want("admissibility")) report.add(verify_admissibility(*eq, built, cfg));
    if (want("bridge")) report.add(verify_bridge_convergence(built, cfg));
    if (want("density")) {
        std::optional<DeterministicOracles> oracle;
        if (built.model.kind == SignalKind::DeterministicVol && built.model.has_affine())
            oracle = DeterministicOracles{built.model.gamma, built.model.affine_C};
        report.add(verify_density_identities(built, oracle, cfg));
    }
    if (cfg.run_static_invariance && want("static_invariance") && built.model.has_affine()) {
        StaticSpec sspec{built.model.gamma, built.model.affine_C};
        report.add(verify_static_v_invariance(sspec, cfg));
    }

    if (want("exclusion_rate")) {
        CheckEntry e;
        e.name = "exclusion_rate";
        e.tolerance = cfg.exclusion_max;
        double worst = 0.0;
        for (const auto* run : {&eq, &zero, &k2, &k05, &jump})
            if (run->has_value()) worst = std::max(worst, (*run)->exclusion_rate);
        e.estimate = worst;
        e.pass = worst < cfg.exclusion_max;
        e.n = static_cast<long>(cfg.paths_major);
        e.detail = "max path-error rate over the battery runs";
        report.add(e);
    }
    return report;
}

}  // namespace kyle
