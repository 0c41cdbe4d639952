#include "kyle/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "kyle/errors.hpp"
#include "kyle/numerics.hpp"
#include "kyle/stats.hpp"

namespace kyle {

namespace {

constexpr double kLogUnderflow = -690.77552789821368;  // log(1e-300)

struct GridCache {
    std::vector<double> t, dt, sqrt_dt;
    std::vector<double> V, Vmt, sig;
    // affine fast path: a = 1/(gamma t + C)
    bool affine = false;
    bool is_static = false;
    double C = 0.0, gamma = 1.0;
    std::vector<double> inv_gtC, gVC;  // 1/(gamma t_k + C), gamma V_k + C
    std::vector<double> z_sd;          // exact signal-step sd (affine)
    double z0_sd = 0.0, z1_sd = 0.0;
    // quadratic initial segment: base diffusion on [0, v0]
    std::size_t base_steps = 2048;
    // exact bridge steps
    std::vector<double> br_decay, br_var, br_cov;
    // event schedule
    std::vector<std::size_t> cp_nodes, win_nodes;
    std::vector<std::pair<std::size_t, double>> jump_nodes;
};

double affine_G(double gamma, double C, double s, double t) {
    return (t - s) / ((gamma * s + C) * (gamma * t + C));
}

GridCache build_cache(const SimSpec& spec, const TimeGrid& grid) {
    const SignalModel& m = *spec.model;
    GridCache c;
    const std::size_t n = grid.size();
    c.t = grid.nodes;
    c.dt.resize(n - 1);
    c.sqrt_dt.resize(n - 1);
    c.V.resize(n);
    c.Vmt.resize(n);
    c.sig.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.V[k] = m.V(c.t[k]);
        c.Vmt[k] = c.V[k] - c.t[k];
        c.sig[k] = m.sigma(c.t[k]);
        if (!(c.Vmt[k] > 0.0))
            throw InvalidParameter("simulate: clock must stay above t on the grid");
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        c.dt[k] = grid.dt(k);
        c.sqrt_dt[k] = std::sqrt(c.dt[k]);
    }
    c.gamma = m.gamma;
    c.is_static = m.kind == SignalKind::Static;
    c.affine = m.has_affine();
    if (c.affine) {
        c.C = m.affine_C;
        c.inv_gtC.resize(n);
        c.gVC.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            c.inv_gtC[k] = 1.0 / (c.gamma * c.t[k] + c.C);
            c.gVC[k] = c.gamma * c.V[k] + c.C;
        }
        c.z_sd.assign(n - 1, 0.0);
        if (!c.is_static) {
            for (std::size_t k = 0; k + 1 < n; ++k)
                c.z_sd[k] = std::sqrt(affine_G(c.gamma, c.C, c.V[k], c.V[k + 1]));
            c.z0_sd = std::sqrt(affine_G(c.gamma, c.C, 0.0, c.V[0]));
            c.z1_sd = std::sqrt(affine_G(c.gamma, c.C, c.V[n - 1], m.V(1.0)));
        } else {
            c.z0_sd = std::sqrt(affine_G(c.gamma, c.C, 0.0, 1.0));  // eta_1 draw
            c.z1_sd = 0.0;
        }
    }

    if (spec.scheme == Scheme::TransformedExactGaussian) {
        if (!c.affine)
            throw InvalidParameter("exact-gaussian scheme: affine volatility family only");
        if (spec.strategy.rate_scale() != 1.0 ||
            spec.strategy.kind == StrategyKind::CustomDrift)
            throw InvalidParameter("exact-gaussian scheme: equilibrium drift only");
        c.br_decay.resize(n - 1);
        c.br_var.resize(n - 1);
        c.br_cov.resize(n - 1);
        const int sub = 16;
        std::vector<double> A(sub + 1);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double h = c.dt[k] / sub;
            auto f = [&](double s) { return 1.0 / (m.V(s) - s); };
            A[0] = 0.0;
            for (int i = 0; i + 2 <= sub; i += 2) {
                const double s0 = c.t[k] + i * h;
                A[i + 1] = A[i] + h / 6.0 * (f(s0) + 4.0 * f(s0 + 0.5 * h) + f(s0 + h));
                A[i + 2] = A[i] + h / 3.0 * (f(s0) + 4.0 * f(s0 + h) + f(s0 + 2.0 * h));
            }
            const double At = A[sub];
            double var = 0.0, cov = 0.0;
            for (int i = 0; i + 2 <= sub; i += 2) {
                auto g = [&](int j) { return std::exp(-(At - A[j])); };
                var += h / 3.0 * (g(i) * g(i) + 4.0 * g(i + 1) * g(i + 1) + g(i + 2) * g(i + 2));
                cov += h / 3.0 * (g(i) + 4.0 * g(i + 1) + g(i + 2));
            }
            c.br_decay[k] = std::exp(-At);
            c.br_var[k] = var;
            c.br_cov[k] = cov;
        }
    }

    for (double tc : spec.checkpoints) c.cp_nodes.push_back(grid.index_of(tc));
    for (double tw : spec.window_bounds) c.win_nodes.push_back(grid.index_of(tw));
    for (const auto& j : spec.strategy.jumps)
        c.jump_nodes.emplace_back(grid.index_of(j.time), j.size);
    std::sort(c.jump_nodes.begin(), c.jump_nodes.end());
    return c;
}

// Euler step of the clocked signal with one level of bridged sub-step retry;
// returns false when the state cannot be kept inside the interval.
bool quad_z_step(const SignalModel& m, const Interval& I, double t, double dt, double w_total,
                 NormalStream& zs, double& Z) {
    const double prop = Z + m.sigma(t) * m.a(m.V(t), Z) * w_total;
    if (I.contains(prop)) {
        Z = prop;
        return true;
    }
    double g[4];
    double gbar = 0.0;
    for (auto& gi : g) {
        gi = 0.5 * std::sqrt(dt) * zs.next_normal();
        gbar += 0.25 * gi;
    }
    double z = Z;
    for (int i = 0; i < 4; ++i) {
        const double wi = 0.25 * w_total + (g[i] - gbar);
        const double ti = t + 0.25 * i * dt;
        z += m.sigma(ti) * m.a(m.V(ti), z) * wi;
        if (!I.contains(z)) return false;
    }
    Z = z;
    return true;
}

// base diffusion d eta = a(s, eta) d beta, one Euler step with bridged retry
bool base_eta_step(const SignalModel& m, const Interval& I, double s, double h, double w_total,
                   NormalStream& zs, double& eta) {
    const double prop = eta + m.a(s, eta) * w_total;
    if (I.contains(prop)) {
        eta = prop;
        return true;
    }
    double g[4];
    double gbar = 0.0;
    for (auto& gi : g) {
        gi = 0.5 * std::sqrt(h) * zs.next_normal();
        gbar += 0.25 * gi;
    }
    double e = eta;
    for (int i = 0; i < 4; ++i) {
        const double wi = 0.25 * w_total + (g[i] - gbar);
        e += m.a(s + 0.25 * i * h, e) * wi;
        if (!I.contains(e)) return false;
    }
    eta = e;
    return true;
}

bool base_eta_path(const SignalModel& m, const Interval& I, double horizon, std::size_t steps,
                   NormalStream& zs, double& eta_out) {
    double eta = 0.0;
    const double h = horizon / static_cast<double>(steps);
    const double sqrt_h = std::sqrt(h);
    for (std::size_t i = 0; i < steps; ++i) {
        const double s = h * static_cast<double>(i);
        if (!base_eta_step(m, I, s, h, sqrt_h * zs.next_normal(), zs, eta)) return false;
    }
    eta_out = eta;
    return true;
}

struct JumpTaken {
    double time = 0.0, d_theta = 0.0, xi_pre = 0.0, xi_post = 0.0;
};

struct PathOut {
    PathError error = PathError::None;
    double error_time = 0.0;
    double xi_cp[8] = {}, z_cp[8] = {}, theta_cp[8] = {};
    double y_w[24] = {};
    double xi_term = 0, z_term = 0, z1 = 0, theta_term = 0;
    double w_direct = 0, w_ibp = 0;
    double int_p_db = 0, int_p2_dt = 0, sliver = 0;
    double jump_penalty_max = 0.0;
    double psi0 = 0;
    double min_z = 1e308, max_z = -1e308, min_xi = 1e308, max_xi = -1e308, max_abs_r = 0;
};

void run_one(const SimSpec& spec, const GridCache& c, std::uint64_t path_index, PathOut& out,
             PathBundle* bundle) {
    const SignalModel& m = *spec.model;
    const BridgeKernel& kernel = *spec.kernel;
    const PricingRule& rule = *spec.rule;
    const Interval& I = m.state_interval;
    const std::size_t n = c.t.size();
    const double gamma = c.gamma;
    const double price_c = rule.c;
    const double rate_scale = spec.strategy.rate_scale();
    const bool custom = spec.strategy.kind == StrategyKind::CustomDrift;
    // the transition density only enters through the bridge rate; strategies
    // that never evaluate it cannot underflow on it
    const bool uses_bridge_rate = !custom && rate_scale != 0.0;
    const bool exact_step = spec.scheme == Scheme::TransformedExactGaussian;
    const bool xi_euler = spec.scheme == Scheme::XiEuler;

    NormalStream zs(spec.seed, path_index, 0);
    NormalStream bs(spec.seed, path_index, 1);
    NormalStream es(spec.seed, path_index, 2);

    double Z;
    if (c.affine) {
        Z = c.z0_sd * zs.next_normal();
    } else if (!base_eta_path(m, I, m.v0, c.base_steps, zs, Z)) {
        out.error = PathError::StateEscape;
        return;
    }

    double R = 0.0, xi = 0.0, B = 0.0, beta = 0.0, th = 0.0;
    double w_direct = 0.0, S1 = 0.0, S2 = 0.0;
    double ipdb = 0.0, ip2 = 0.0;
    JumpTaken jumps_taken[8];
    int n_jumps = 0;
    std::size_t next_cp = 0, next_win = 0, next_jump = 0;

    if (bundle) {
        bundle->B.assign(n, 0.0);
        bundle->beta.assign(n, 0.0);
        bundle->Z.assign(n, 0.0);
        bundle->xi.assign(n, 0.0);
        bundle->Y.assign(n, 0.0);
        bundle->theta.assign(n, 0.0);
    }

    for (std::size_t k = 0; k < n; ++k) {
        const double t = c.t[k];

        // scheduled blocks act additively on the transformed state (K_w = v)
        while (next_jump < c.jump_nodes.size() && c.jump_nodes[next_jump].first == k) {
            const double dj = c.jump_nodes[next_jump].second;
            const double xi_pre = xi;
            th += dj;
            R += dj;
            xi = c.affine ? R * c.inv_gtC[k] : kernel.lambda(t, R);
            w_direct += (th - dj) * (xi - xi_pre);
            S1 += dj;
            S2 += (xi_pre + price_c) * dj + dj * (xi - xi_pre);
            if (n_jumps < 8) jumps_taken[n_jumps++] = {t, dj, xi_pre, xi};
            if (bundle) bundle->jumps.push_back({k, t, dj, xi_pre, xi});
            ++next_jump;
        }
        if (next_cp < c.cp_nodes.size() && c.cp_nodes[next_cp] == k) {
            out.z_cp[next_cp] = Z;
            out.xi_cp[next_cp] = xi;
            out.theta_cp[next_cp] = th;
            ++next_cp;
        }
        if (next_win < c.win_nodes.size() && c.win_nodes[next_win] == k) {
            out.y_w[next_win] = th + B;
            ++next_win;
        }
        if (bundle) {
            bundle->B[k] = B;
            bundle->beta[k] = beta;
            bundle->Z[k] = Z;
            bundle->xi[k] = xi;
            bundle->theta[k] = th;
            bundle->Y[k] = th + B;
        }
        out.min_z = std::min(out.min_z, Z);
        out.max_z = std::max(out.max_z, Z);
        out.min_xi = std::min(out.min_xi, xi);
        out.max_xi = std::max(out.max_xi, xi);
        out.max_abs_r = std::max(out.max_abs_r, std::abs(R));
        if (k + 1 == n) break;

        const double U = c.affine ? c.gVC[k] * Z : kernel.v(c.V[k], Z);
        const double gap = U - R;
        const double vmt = c.Vmt[k];
        if (std::abs(R) > spec.explosion_bound) {
            out.error = PathError::Explosion;
            out.error_time = t;
            return;
        }
        if (uses_bridge_rate && gap * gap > 1200.0 * vmt) {
            const double log_rho =
                kernel.log_density_p(t, R, c.V[k], U) - std::log(kernel.a(c.V[k], Z));
            if (log_rho < kLogUnderflow) {
                out.error = PathError::DensityUnderflow;
                out.error_time = t;
                return;
            }
        }
        // advance the signal first: it is autonomous, and averaging its
        // transformed state across the step removes the leading filter lag
        // of a left-endpoint drift
        double Z_next = Z;
        double beta_inc = 0.0;
        if (c.affine) {
            if (!c.is_static) {
                const double draw = zs.next_normal();
                Z_next = Z + c.z_sd[k] * draw;
                beta_inc = c.sqrt_dt[k] * draw;
            }
        } else {
            const double draw = zs.next_normal();
            if (!quad_z_step(m, I, t, c.dt[k], c.sqrt_dt[k] * draw, zs, Z_next)) {
                out.error = PathError::StateEscape;
                out.error_time = t;
                return;
            }
            beta_inc = c.sqrt_dt[k] * draw;
        }
        const double U_next =
            c.affine ? c.gVC[k + 1] * Z_next : kernel.v(c.V[k + 1], Z_next);
        const double U_mid = 0.5 * (U + U_next);

        const double alpha_eq = (U_mid - R) / vmt - gamma * xi;
        const double alpha = custom ? spec.strategy.drift(t, xi, Z) : rate_scale * alpha_eq;

        const double dt = c.dt[k];
        const double dB = c.sqrt_dt[k] * bs.next_normal();
        const double P = xi + price_c;
        ipdb += P * dB;
        ip2 += P * P * dt;

        const double xi_old = xi;
        if (xi_euler) {
            const double w_here = kernel.a(t, xi);
            double prop = xi + w_here * (alpha * dt + dB);
            if (!I.contains(prop)) {
                double g[4];
                double gbar = 0.0;
                for (auto& gi : g) {
                    gi = 0.5 * c.sqrt_dt[k] * bs.next_normal();
                    gbar += 0.25 * gi;
                }
                prop = xi;
                bool ok = true;
                for (int i = 0; i < 4 && ok; ++i) {
                    const double wi = 0.25 * dB + (g[i] - gbar);
                    prop += kernel.a(t, prop) * (alpha * 0.25 * dt + wi);
                    ok = I.contains(prop);
                }
                if (!ok) {
                    out.error = PathError::StateEscape;
                    out.error_time = t;
                    return;
                }
            }
            xi = prop;
            R = c.affine ? xi / c.inv_gtC[k + 1] : kernel.v(c.t[k + 1], xi);
        } else if (exact_step) {
            const double cov = c.br_cov[k];
            const double cond_var = std::max(0.0, c.br_var[k] - cov * cov / dt);
            const double noise = (cov / dt) * dB + std::sqrt(cond_var) * es.next_normal();
            R = U_mid + (R - U_mid) * c.br_decay[k] + noise;
            xi = c.affine ? R * c.inv_gtC[k + 1] : kernel.lambda(c.t[k + 1], R);
        } else {
            R += dB + (alpha + gamma * xi) * dt;
            xi = c.affine ? R * c.inv_gtC[k + 1] : kernel.lambda(c.t[k + 1], R);
        }
        th += alpha * dt;
        B += dB;
        Z = Z_next;
        beta += beta_inc;

        w_direct += (th - alpha * dt) * (xi - xi_old);
        S1 += alpha * dt;
        S2 += (xi_old + price_c) * (alpha * dt);
    }

    // extend the signal alone to time 1 for the settlement value
    double z1 = Z;
    if (c.affine) {
        if (!c.is_static) z1 = Z + c.z1_sd * zs.next_normal();
    } else {
        const double t_last = c.t[n - 1];
        const int sub = 16;
        const double h = (1.0 - t_last) / sub;
        const double sqrt_h = std::sqrt(h);
        for (int i = 0; i < sub; ++i) {
            const double s = t_last + h * i;
            if (!quad_z_step(m, I, s, h, sqrt_h * zs.next_normal(), zs, z1)) {
                out.error = PathError::StateEscape;
                out.error_time = t_last;
                return;
            }
        }
    }

    const double P_term = xi + price_c;
    w_direct += (z1 - P_term) * th;
    out.w_direct = w_direct;
    out.w_ibp = z1 * S1 - S2;
    out.xi_term = xi;
    out.z_term = Z;
    out.z1 = z1;
    out.theta_term = th;
    out.int_p_db = ipdb;
    out.int_p2_dt = ip2;
    const double eps = 1.0 - c.t[n - 1];
    out.sliver = 3.0 * gamma * std::abs(P_term) * std::sqrt(eps) +
                 0.5 * gamma * gamma * P_term * P_term * eps;
    out.psi0 = rule.psi(z1, 0.0, 0.0);
    for (int j = 0; j < n_jumps; ++j) {
        const auto& jt = jumps_taken[j];
        const double D = rule.excess_integral(jt.time, jt.xi_pre, jt.xi_post, z1 - price_c) -
                         (jt.xi_post + price_c - z1) * jt.d_theta;
        if (j == 0 || D > out.jump_penalty_max) out.jump_penalty_max = D;
    }
    if (bundle) {
        bundle->z1 = z1;
        bundle->wealth_direct = w_direct;
        bundle->wealth_ibp = out.w_ibp;
    }
}

void check_spec(const SimSpec& spec) {
    if (!spec.model || !spec.kernel || !spec.rule)
        throw InvalidParameter("simulate: model, kernel and rule are required");
    if (spec.rule->mirror_kernel.get() != spec.kernel)
        throw InvalidParameter("simulate: pricing rule must mirror the kernel (w = a)");
    if (spec.strategy.kind == StrategyKind::Equilibrium && !spec.strategy.jumps.empty())
        throw InvalidParameter("simulate: the equilibrium strategy does not jump");
    if (spec.strategy.kind == StrategyKind::CustomDrift && !spec.strategy.drift)
        throw InvalidParameter("simulate: custom strategy needs a drift");
    if (spec.checkpoints.size() > 8) throw InvalidParameter("simulate: at most 8 checkpoints");
    if (spec.window_bounds.size() > 24)
        throw InvalidParameter("simulate: at most 24 window bounds");
    if (spec.strategy.jumps.size() > 8) throw InvalidParameter("simulate: at most 8 blocks");
}

TimeGrid spliced_grid(const SimSpec& spec) {
    std::vector<double> extra = spec.checkpoints;
    extra.insert(extra.end(), spec.window_bounds.begin(), spec.window_bounds.end());
    for (const auto& j : spec.strategy.jumps) extra.push_back(j.time);
    return spec.grid.with_times(extra);
}

void parallel_over_paths(std::size_t n_paths,
                         const std::function<void(std::size_t, std::size_t)>& worker) {
    const unsigned workers =
        std::min<unsigned>(worker_count(), static_cast<unsigned>(std::min<std::size_t>(n_paths, 512)));
    if (workers <= 1) {
        worker(0, n_paths);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n_paths, lo + chunk);
        if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

unsigned worker_count() {
    if (const char* env = std::getenv("KYLE_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v <= 512) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

std::vector<double> SimResult::good_column(const std::vector<double>& col) const {
    std::vector<double> out;
    out.reserve(col.size());
    for (std::size_t i = 0; i < n_paths && i < col.size(); ++i)
        if (good(i)) out.push_back(col[i]);
    return out;
}

SimResult simulate_paths(const SimSpec& spec, std::size_t n_paths) {
    check_spec(spec);
    if (n_paths < 1) throw InvalidParameter("simulate: n_paths must be >= 1");
    const TimeGrid grid = spliced_grid(spec);
    const GridCache cache = build_cache(spec, grid);

    SimResult res;
    res.n_paths = n_paths;
    res.checkpoint_times = spec.checkpoints;
    res.window_times = spec.window_bounds;
    const std::size_t ncp = spec.checkpoints.size();
    const std::size_t nw = spec.window_bounds.size();
    res.error.assign(n_paths, PathError::None);
    res.error_time.assign(n_paths, 0.0);
    res.xi_cp.assign(n_paths * ncp, 0.0);
    res.z_cp.assign(n_paths * ncp, 0.0);
    res.theta_cp.assign(n_paths * ncp, 0.0);
    res.y_w.assign(n_paths * nw, 0.0);
    for (auto* v : {&res.xi_term, &res.z_term, &res.z1, &res.theta_term, &res.wealth_direct,
                    &res.wealth_ibp, &res.int_p_db, &res.int_p2_dt, &res.sliver_bound,
                    &res.jump_penalty_max, &res.psi0, &res.min_z, &res.max_z, &res.min_xi,
                    &res.max_xi, &res.max_abs_r})
        v->assign(n_paths, 0.0);

    parallel_over_paths(n_paths, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            PathOut out;
            run_one(spec, cache, i, out, nullptr);
            res.error[i] = out.error;
            res.error_time[i] = out.error_time;
            for (std::size_t j = 0; j < ncp; ++j) {
                res.xi_cp[i * ncp + j] = out.xi_cp[j];
                res.z_cp[i * ncp + j] = out.z_cp[j];
                res.theta_cp[i * ncp + j] = out.theta_cp[j];
            }
            for (std::size_t j = 0; j < nw; ++j) res.y_w[i * nw + j] = out.y_w[j];
            res.xi_term[i] = out.xi_term;
            res.z_term[i] = out.z_term;
            res.z1[i] = out.z1;
            res.theta_term[i] = out.theta_term;
            res.wealth_direct[i] = out.w_direct;
            res.wealth_ibp[i] = out.w_ibp;
            res.int_p_db[i] = out.int_p_db;
            res.int_p2_dt[i] = out.int_p2_dt;
            res.sliver_bound[i] = out.sliver;
            res.jump_penalty_max[i] = out.jump_penalty_max;
            res.psi0[i] = out.psi0;
            res.min_z[i] = out.min_z;
            res.max_z[i] = out.max_z;
            res.min_xi[i] = out.min_xi;
            res.max_xi[i] = out.max_xi;
            res.max_abs_r[i] = out.max_abs_r;
        }
    });

    for (std::size_t i = 0; i < n_paths; ++i)
        if (res.error[i] != PathError::None) ++res.n_errors;
    res.exclusion_rate = static_cast<double>(res.n_errors) / static_cast<double>(n_paths);
    return res;
}

PathBundle simulate_bundle(const SimSpec& spec, std::uint64_t path_index) {
    check_spec(spec);
    const TimeGrid grid = spliced_grid(spec);
    const GridCache cache = build_cache(spec, grid);
    PathBundle bundle;
    bundle.grid = grid;
    bundle.master_seed = spec.seed;
    bundle.path_index = path_index;
    PathOut out;
    run_one(spec, cache, path_index, out, &bundle);
    bundle.error = out.error;
    return bundle;
}

double wealth_direct(const PathBundle& bundle, const PricingRule& rule) {
    const std::size_t n = bundle.xi.size();
    if (n < 2 || bundle.Z.size() != n || bundle.theta.size() != n)
        throw InconsistentBundle("wealth: bundle arrays disagree");
    KahanSum acc;
    std::size_t jix = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j0 = jix;
        double jump_total = 0.0;
        while (jix < bundle.jumps.size() && bundle.jumps[jix].node == k) {
            jump_total += bundle.jumps[jix].d_theta;
            ++jix;
        }
        if (k > 0) {
            // continuous segment from node k-1, ending at the pre-block value
            const double arrival = jix > j0 ? bundle.jumps[j0].xi_pre : bundle.xi[k];
            acc.add(bundle.theta[k - 1] * (arrival - bundle.xi[k - 1]));
        }
        double th = bundle.theta[k] - jump_total;  // position before the blocks
        for (std::size_t j = j0; j < jix; ++j) {
            acc.add(th * (bundle.jumps[j].xi_post - bundle.jumps[j].xi_pre));
            th += bundle.jumps[j].d_theta;
        }
    }
    acc.add((bundle.z1 - (bundle.xi[n - 1] + rule.c)) * bundle.theta[n - 1]);
    return acc.value();
}

double wealth_ibp(const PathBundle& bundle, const PricingRule& rule) {
    const std::size_t n = bundle.xi.size();
    if (n < 2 || bundle.theta.size() != n)
        throw InconsistentBundle("wealth: bundle arrays disagree");
    KahanSum s1, s2;
    std::size_t jix = 0;
    double theta_prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double jump_sum = 0.0;
        while (jix < bundle.jumps.size() && bundle.jumps[jix].node == k) {
            const auto& j = bundle.jumps[jix];
            s1.add(j.d_theta);
            s2.add((j.xi_pre + rule.c) * j.d_theta + j.d_theta * (j.xi_post - j.xi_pre));
            jump_sum += j.d_theta;
            ++jix;
        }
        if (k > 0) {
            const double d_cont = (bundle.theta[k] - jump_sum) - theta_prev;
            s1.add(d_cont);
            s2.add((bundle.xi[k - 1] + rule.c) * d_cont);
        }
        theta_prev = bundle.theta[k];
    }
    return bundle.z1 * s1.value() - s2.value();
}

SignalPathStats simulate_signal(const SignalModel& model, const BridgeKernel& kernel,
                                const TimeGrid& grid, std::uint64_t seed,
                                std::size_t n_paths) {
    if (n_paths < 1) throw InvalidParameter("simulate_signal: n_paths must be >= 1");
    SimSpec spec;
    spec.model = &model;
    spec.kernel = &kernel;
    spec.seed = seed;
    spec.grid = grid;
    const GridCache c = build_cache(spec, grid);
    const Interval& I = model.state_interval;
    const std::size_t n = grid.size();

    SignalPathStats s;
    s.error.assign(n_paths, PathError::None);
    s.z0.assign(n_paths, 0.0);
    s.z_term.assign(n_paths, 0.0);
    s.z1.assign(n_paths, 0.0);
    s.min_z.assign(n_paths, 0.0);
    s.max_z.assign(n_paths, 0.0);

    parallel_over_paths(n_paths, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            NormalStream zs(seed, i, 0);
            double Z = 0.0;
            bool ok = true;
            if (c.affine) {
                Z = c.z0_sd * zs.next_normal();
            } else {
                ok = base_eta_path(model, I, model.v0, c.base_steps, zs, Z);
            }
            double zmin = Z, zmax = Z;
            s.z0[i] = Z;
            for (std::size_t k = 0; ok && k + 1 < n; ++k) {
                if (c.affine) {
                    if (!c.is_static) Z += c.z_sd[k] * zs.next_normal();
                } else {
                    ok = quad_z_step(model, I, c.t[k], c.dt[k],
                                     c.sqrt_dt[k] * zs.next_normal(), zs, Z);
                }
                zmin = std::min(zmin, Z);
                zmax = std::max(zmax, Z);
            }
            double z1 = Z;
            if (ok) {
                if (c.affine) {
                    if (!c.is_static) z1 = Z + c.z1_sd * zs.next_normal();
                } else {
                    const double t_last = c.t[n - 1];
                    const int sub = 16;
                    const double h = (1.0 - t_last) / sub;
                    for (int q = 0; ok && q < sub; ++q)
                        ok = quad_z_step(model, I, t_last + h * q, h,
                                         std::sqrt(h) * zs.next_normal(), zs, z1);
                }
            }
            if (!ok) {
                s.error[i] = PathError::StateEscape;
                continue;
            }
            s.z_term[i] = Z;
            s.z1[i] = z1;
            s.min_z[i] = zmin;
            s.max_z[i] = zmax;
        }
    });
    for (auto e : s.error)
        if (e != PathError::None) ++s.n_errors;
    return s;
}

BaseEtaStats simulate_base_eta(const BridgeKernel& kernel, const TimeGrid& grid,
                               std::uint64_t seed, std::size_t n_paths) {
    if (n_paths < 1) throw InvalidParameter("simulate_base_eta: n_paths must be >= 1");
    const SignalModel& m = kernel.model();
    const Interval& I = m.state_interval;
    const bool affine = m.has_affine();
    const std::size_t n = grid.size();

    std::vector<double> step_sd;
    if (affine) {
        step_sd.resize(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k)
            step_sd[k] = std::sqrt(affine_G(m.gamma, m.affine_C, grid.nodes[k], grid.nodes[k + 1]));
    }

    BaseEtaStats s;
    s.error.assign(n_paths, PathError::None);
    s.eta_term.assign(n_paths, 0.0);
    s.kappa_term.assign(n_paths, 0.0);

    parallel_over_paths(n_paths, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            NormalStream zs(seed, i, 3);
            double eta = 0.0;
            bool ok = true;
            for (std::size_t k = 0; ok && k + 1 < n; ++k) {
                if (affine) {
                    eta += step_sd[k] * zs.next_normal();
                } else {
                    const double h = grid.dt(k);
                    ok = base_eta_step(m, I, grid.nodes[k], h, std::sqrt(h) * zs.next_normal(),
                                       zs, eta);
                }
            }
            if (!ok) {
                s.error[i] = PathError::StateEscape;
                continue;
            }
            s.eta_term[i] = eta;
            s.kappa_term[i] = kernel.v(grid.horizon(), eta);
        }
    });
    for (auto e : s.error)
        if (e != PathError::None) ++s.n_errors;
    return s;
}

}  // namespace kyle
