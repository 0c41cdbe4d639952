#include "kyle/examples.hpp"

#include <cmath>
#include <sstream>

#include "kyle/errors.hpp"
#include "kyle/stats.hpp"

namespace kyle {

double DeterministicOracles::rho(double s, double y, double t, double x) const {
    const double var = G(s, t);
    const double d = x - y;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

double DeterministicOracles::u(double t, double x) const {
    const double gtC = gamma * t + C;
    return std::exp(0.5 * gamma * x * x / gtC - 0.5 * std::log(gtC / C));
}

double DeterministicOracles::psi(double a, double t, double x) const {
    const double gtC = gamma * t + C;
    const double d = x - a;
    return 0.5 * gtC * d * d + std::log((gamma + C) / gtC) / (2.0 * gamma);
}

DeterministicVolSpec DeterministicVolSpec::constant(double gamma, double q,
                                                    double sigma_const) {
    DeterministicVolSpec spec;
    spec.gamma = gamma;
    spec.q = q;
    spec.Sigma = [sigma_const](double) { return sigma_const; };
    spec.Sigma_sq_int = [sigma_const](double t) { return sigma_const * sigma_const * t; };
    return spec;
}

DeterministicBuild build_deterministic(const DeterministicVolSpec& spec) {
    if (!(spec.gamma > 0.0)) throw AssumptionViolation("deterministic: gamma must be > 0");
    if (!spec.Sigma || !spec.Sigma_sq_int)
        throw InvalidParameter("deterministic: Sigma and its cumulative square are required");
    if (spec.q < 0.0) throw AssumptionViolation("deterministic: q must be >= 0");

    const double gamma = spec.gamma;
    const double total = spec.q + spec.Sigma_sq_int(1.0);
    if (!(total > 0.0))
        throw AssumptionViolation("deterministic: q + int Sigma^2 must be positive");
    const double C = 0.5 * (-gamma + std::sqrt(gamma * gamma + 4.0 / total));

    // standing inequality q + int_0^t Sigma^2 > t / (C (C + gamma t)) on [0,1)
    const int n_check = 1000;
    for (int i = 0; i < n_check; ++i) {
        const double t = static_cast<double>(i) / n_check;
        const double lhs = spec.q + spec.Sigma_sq_int(t);
        const double rhs = t / (C * (C + gamma * t));
        if (!(lhs > rhs)) {
            std::ostringstream msg;
            msg << "deterministic: standing inequality fails at t = " << t << " (lhs " << lhs
                << " <= rhs " << rhs << ")";
            throw AssumptionViolation(msg.str());
        }
        if (spec.Sigma(t) < 0.0)
            throw AssumptionViolation("deterministic: Sigma must be nonnegative");
    }
    const double m1 = 1.0 / C - gamma * total;
    if (std::abs(spec.Sigma(1.0) - m1) <= 1e-9)
        throw AssumptionViolation(
            "deterministic: Sigma(1) must differ from 1/C - gamma q - gamma int Sigma^2");

    DeterministicBuild out;
    out.C = C;
    out.total_variance = total;
    out.oracles = DeterministicOracles{gamma, C};

    SignalModel& model = out.model;
    model.gamma = gamma;
    model.kind = SignalKind::DeterministicVol;
    model.state_interval = Interval{};  // whole line
    model.affine_C = C;
    model.a = [gamma, C](double t, double) { return 1.0 / (gamma * t + C); };
    model.a_x = [](double, double) { return 0.0; };
    model.a_xx = [](double, double) { return 0.0; };
    model.a_t = [gamma, C](double t, double) {
        const double gtC = gamma * t + C;
        return -gamma / (gtC * gtC);
    };
    const auto Sigma = spec.Sigma;
    const auto Sq = spec.Sigma_sq_int;
    const double q = spec.q;
    const auto m = [gamma, C, q, Sq](double t) { return 1.0 / C - gamma * (q + Sq(t)); };
    model.sigma = [Sigma, m](double t) { return Sigma(t) / m(t); };
    model.V = [gamma, C, m](double t) { return 1.0 / (gamma * m(t)) - C / gamma; };
    model.v0 = model.V(0.0);

    out.kernel = make_kernel(model);
    out.rule = equilibrium_rule(model, out.kernel);
    return out;
}

BuiltModel build_quadratic(const QuadraticVolSpec& spec) {
    const double gamma = spec.gamma;
    const double delta = spec.delta;
    if (!(gamma > 0.0)) throw AssumptionViolation("quadratic: gamma must be > 0");
    if (!(std::abs(delta) > 0.0) || !(std::abs(delta) < gamma))
        throw AssumptionViolation("quadratic: need 0 < |delta| < gamma");
    if (!(spec.d / delta > 0.0)) throw AssumptionViolation("quadratic: need d/delta > 0");

    const double sum = spec.b / delta;        // r_lo + r_hi
    const double prod = -spec.d / delta;      // r_lo * r_hi < 0
    const double disc = std::sqrt(sum * sum - 4.0 * prod);
    const double r_hi = 0.5 * (sum + disc);
    const double r_lo = 0.5 * (sum - disc);

    BuiltModel out;
    SignalModel& model = out.model;
    model.gamma = gamma;
    model.kind = SignalKind::Quadratic;
    model.state_interval = Interval{r_lo, r_hi};
    model.has_quad = true;
    model.quad = SignalModel::QuadShape{delta, spec.b, spec.d, r_lo, r_hi};
    model.a = [gamma, r_lo, r_hi](double, double x) { return gamma * (r_hi - x) * (x - r_lo); };
    model.a_x = [gamma, r_lo, r_hi](double, double x) { return gamma * (r_lo + r_hi - 2.0 * x); };
    model.a_xx = [gamma](double, double) { return -2.0 * gamma; };
    model.a_t = [](double, double) { return 0.0; };
    const double ratio = delta * delta / (gamma * gamma);  // sigma^2, also 1 - t0
    model.sigma = [ratio](double) { return std::sqrt(ratio); };
    model.V = [ratio](double t) { return 1.0 - ratio * (1.0 - t); };
    model.v0 = 1.0 - ratio;

    out.kernel = make_kernel(model);
    out.rule = equilibrium_rule(model, out.kernel);
    return out;
}

BuiltModel build_static(const StaticSpec& spec, double clock_v0) {
    if (!(spec.gamma > 0.0)) throw AssumptionViolation("static: gamma must be > 0");
    if (!(spec.base_C > 0.0)) throw AssumptionViolation("static: base C must be > 0");
    if (!(clock_v0 > 0.0) || !(clock_v0 <= 1.0))
        throw AssumptionViolation("static: clock v0 must lie in (0, 1]");

    const double gamma = spec.gamma;
    const double C = spec.base_C;

    BuiltModel out;
    SignalModel& model = out.model;
    model.gamma = gamma;
    model.state_interval = Interval{};
    model.affine_C = C;
    model.a = [gamma, C](double t, double) { return 1.0 / (gamma * t + C); };
    model.a_x = [](double, double) { return 0.0; };
    model.a_xx = [](double, double) { return 0.0; };
    model.a_t = [gamma, C](double t, double) {
        const double gtC = gamma * t + C;
        return -gamma / (gtC * gtC);
    };
    model.v0 = clock_v0;
    if (clock_v0 == 1.0) {
        model.kind = SignalKind::Static;
        model.sigma = [](double) { return 0.0; };
        model.V = [](double) { return 1.0; };
    } else {
        model.kind = SignalKind::Custom;
        const double slope = 1.0 - clock_v0;
        model.sigma = [slope](double) { return std::sqrt(slope); };
        model.V = [clock_v0, slope](double t) { return clock_v0 + slope * t; };
    }

    out.kernel = make_kernel(model);
    out.rule = equilibrium_rule(model, out.kernel);
    return out;
}

}  // namespace kyle
