#include "kyle/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kyle/kernel.hpp"

namespace kyle {

namespace {

// state grid with a small edge margin on bounded intervals
std::vector<double> state_grid(const Interval& I, int n) {
    std::vector<double> xs(n);
    const double lo = std::isinf(I.lo) ? -3.0 : I.lo + 0.02 * (I.hi - I.lo);
    const double hi = std::isinf(I.hi) ? 3.0 : I.hi - 0.02 * (I.hi - I.lo);
    for (int i = 0; i < n; ++i)
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return xs;
}

struct PdeScan {
    double min_value = std::numeric_limits<double>::infinity();
    double max_residual = 0.0;
};

PdeScan scan_pde(const std::function<double(double, double)>& f,
                 const std::function<double(double, double)>& f_t,
                 const std::function<double(double, double)>& f_xx, double gamma,
                 const std::vector<double>& ts, const std::vector<double>& xs) {
    PdeScan scan;
    for (double t : ts) {
        for (double x : xs) {
            const double val = f(t, x);
            scan.min_value = std::min(scan.min_value, val);
            const double resid = f_t(t, x) / (val * val) + 0.5 * f_xx(t, x) + gamma;
            scan.max_residual = std::max(scan.max_residual, std::abs(resid));
        }
    }
    return scan;
}

}  // namespace

std::vector<double> limit_condition_sequence(const SignalModel& model, int k_min, int k_max) {
    // Panels [1 - 2^-j, 1 - 2^-(j+1)] refine geometrically toward 1. The
    // cumulative exponent A(t) = int_0^t ds/(V(s)-s) and the tilted mass
    // Lambda are tracked in log space; both overflow double range near 1.
    const int sub = 128;  // composite-Simpson subintervals per panel (even)
    std::vector<double> out;

    double A = 0.0;                                          // A at current panel start
    double log_lambda = -std::numeric_limits<double>::infinity();  // log Lambda so far
    const auto inv_gap = [&](double s) { return 1.0 / (model.V(s) - s); };
    const auto growth = [&](double s) {
        const double sig = model.sigma(s);
        return 1.0 + sig * sig;
    };

    for (int j = 0; j < k_max; ++j) {
        const double a = 1.0 - std::ldexp(1.0, -j);
        const double b = 1.0 - std::ldexp(1.0, -(j + 1));
        const double h = (b - a) / sub;

        // cumulative A on the subgrid via running Simpson over pairs
        std::vector<double> As(sub + 1);
        As[0] = A;
        for (int i = 0; i + 2 <= sub; i += 2) {
            const double s0 = a + i * h;
            const double seg = h / 3.0 * (inv_gap(s0) + 4.0 * inv_gap(s0 + h) + inv_gap(s0 + 2.0 * h));
            const double half = h / 6.0 * (inv_gap(s0) + 4.0 * inv_gap(s0 + 0.5 * h) + inv_gap(s0 + h));
            As[i + 1] = As[i] + half;
            As[i + 2] = As[i] + seg;
        }

        // panel contribution to Lambda = int (1 + sigma^2) e^{2A}, shifted by
        // its largest exponent before summation
        const double shift = 2.0 * As[sub];
        double panel = 0.0;
        for (int i = 0; i + 2 <= sub; i += 2) {
            const double f0 = growth(a + i * h) * std::exp(2.0 * As[i] - shift);
            const double f1 = growth(a + (i + 1) * h) * std::exp(2.0 * As[i + 1] - shift);
            const double f2 = growth(a + (i + 2) * h) * std::exp(2.0 * As[i + 2] - shift);
            panel += h / 3.0 * (f0 + 4.0 * f1 + f2);
        }
        const double log_panel = std::log(panel) + shift;
        log_lambda = std::max(log_lambda, log_panel) +
                     std::log1p(std::exp(-std::abs(log_lambda - log_panel)));
        A = As[sub];

        const int k = j + 1;  // value now available at t = 1 - 2^-k
        if (k >= k_min) out.push_back(std::exp(-2.0 * A + log_lambda) * log_lambda);
    }
    return out;
}

VerificationReport validate_assumptions(const SignalModel& model, const PricingRule& rule,
                                        const ValidationOptions& opts) {
    VerificationReport report;
    const auto xs = state_grid(model.state_interval, opts.grid_x);
    std::vector<double> ts(opts.grid_t + 1);
    for (int i = 0; i <= opts.grid_t; ++i) ts[i] = static_cast<double>(i) / opts.grid_t;

    {  // (1) a > 0 and its PDE residual
        const auto scan = scan_pde(model.a, model.a_t, model.a_xx, model.gamma, ts, xs);
        report.add({"a_positive", scan.min_value, 0.0, 0.0, scan.min_value > 0.0, false,
                    static_cast<long>(ts.size() * xs.size()), "min a over the grid"});
        report.add({"a_pde", scan.max_residual, 0.0, opts.pde_tol,
                    scan.max_residual < opts.pde_tol, false,
                    static_cast<long>(ts.size() * xs.size()),
                    "max |a_t/a^2 + a_xx/2 + gamma|"});
    }

    {  // (2) the image of v(t, .) spans the real line
        auto kernel = make_kernel(model);
        bool pass = false;
        double probe_max = 0.0;
        std::string detail;
        if (kernel->v_range_is_whole_line()) {
            pass = true;
            detail = "analytic: v diverges at both interval ends";
            probe_max = std::numeric_limits<double>::infinity();
        } else {
            pass = true;
            for (double t : {0.0, 0.5, 1.0}) {
                for (int side = 0; side < 2; ++side) {
                    double prev = 0.0;
                    double last_step = 0.0;
                    bool grew = true;
                    for (int k = 2; k <= 12; ++k) {
                        double x;
                        const auto& I = model.state_interval;
                        const double end = side == 0 ? I.lo : I.hi;
                        if (std::isinf(end))
                            x = (side == 0 ? -1.0 : 1.0) * std::pow(10.0, k - 1);
                        else
                            x = end + (side == 0 ? 1.0 : -1.0) * (I.hi - I.lo) * std::pow(10.0, -k);
                        const double val = std::abs(kernel->v(t, x));
                        probe_max = std::max(probe_max, val);
                        if (k > 2) {
                            last_step = val - prev;
                            if (last_step <= 1e-9) grew = false;
                        }
                        prev = val;
                    }
                    if (!(probe_max > opts.v_range_bound) && !grew) pass = false;
                }
            }
            detail = "probed divergence of v toward the interval ends";
        }
        report.add({"v_range", probe_max, 0.0, opts.v_range_bound, pass, false, 0, detail});
    }

    {  // (3) sigma separated from 0 (not meaningful for the static signal)
        if (model.kind == SignalKind::Static) {
            report.add({"sigma_min", 0.0, 0.0, 0.0, true, false, 0, "skipped: static signal"});
        } else {
            double sig_min = std::numeric_limits<double>::infinity();
            for (double t : ts) sig_min = std::min(sig_min, model.sigma(t));
            report.add({"sigma_min", sig_min, 0.0, 0.0, sig_min > 0.0, false,
                        static_cast<long>(ts.size()), "min sigma over the grid"});
        }
    }

    {  // (4) V(1) = 1 and V(t) > t up to the horizon
        const double v_end = model.V(1.0);
        report.add({"clock_terminal", std::abs(v_end - 1.0), 0.0, opts.clock_end_tol,
                    std::abs(v_end - 1.0) <= opts.clock_end_tol, false, 1, "|V(1) - 1|"});
        double min_gap = std::numeric_limits<double>::infinity();
        const double horizon = 1.0 - opts.epsilon;
        for (int i = 0; i <= opts.grid_t; ++i) {
            const double t = horizon * static_cast<double>(i) / opts.grid_t;
            min_gap = std::min(min_gap, model.V(t) - t);
        }
        report.add({"clock_above_t", min_gap, 0.0, 0.0, min_gap > 0.0, false,
                    static_cast<long>(opts.grid_t + 1), "min V(t) - t on [0, 1 - eps]"});
    }

    {  // (5) D^2 Lambda log Lambda -> 0
        const auto seq = limit_condition_sequence(model, opts.limit_k_min, opts.limit_k_max);
        bool decreasing = true;
        for (std::size_t i = 1; i < seq.size(); ++i) {
            const int k = opts.limit_k_min + static_cast<int>(i);
            if (k >= 8 && !(seq[i] < seq[i - 1])) decreasing = false;
        }
        const double final_value = seq.empty() ? 0.0 : std::abs(seq.back());
        std::ostringstream detail;
        detail << "sequence at t = 1 - 2^-k, k = " << opts.limit_k_min << ".."
               << opts.limit_k_max << (decreasing ? ", decreasing" : ", NOT decreasing");
        report.add({"limit_condition", final_value, 0.0, opts.limit_tol,
                    decreasing && final_value < opts.limit_tol, false,
                    static_cast<long>(seq.size()), detail.str()});
    }

    {  // (6) w > 0 and its PDE residual
        const auto scan = scan_pde(rule.w, rule.w_t, rule.w_xx, model.gamma, ts, xs);
        report.add({"w_positive", scan.min_value, 0.0, 0.0, scan.min_value > 0.0, false,
                    static_cast<long>(ts.size() * xs.size()), "min w over the grid"});
        report.add({"w_pde", scan.max_residual, 0.0, opts.pde_tol,
                    scan.max_residual < opts.pde_tol, false,
                    static_cast<long>(ts.size() * xs.size()),
                    "max |w_t/w^2 + w_xx/2 + gamma|"});
    }

    return report;
}

}  // namespace kyle
