#include "kyle/kernel.hpp"

#include <cmath>

#include "kyle/errors.hpp"

namespace kyle {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kLogUnderflow = -690.77552789821368;  // log(1e-300)

double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void require_ordered_times(double s, double t) {
    if (!(s < t)) throw InvalidParameter("density: need s < t");
}

}  // namespace

// ---------------------------------------------------------------------------
// BridgeKernel

double BridgeKernel::log_density_p(double s, double x, double t, double y) const {
    require_ordered_times(s, t);
    const double dt = t - s;
    const double d = y - x;
    return log_u(t, y) - log_u(s, x) - 0.5 * (d * d / dt + std::log(dt) + kLogTwoPi);
}

double BridgeKernel::density_p(double s, double x, double t, double y) const {
    return std::exp(log_density_p(s, x, t, y));
}

double BridgeKernel::density_rho(double s, double y, double t, double z) const {
    require_ordered_times(s, t);
    if (!state_interval().contains(y) || !state_interval().contains(z))
        throw DomainViolation("density_rho: state outside the interval");
    return std::exp(log_density_p(s, v(s, y), t, v(t, z))) / a(t, z);
}

void BridgeKernel::p_window(double s, double x, double t, double& lo, double& hi) const {
    const double dt = t - s;
    const double sd = std::sqrt(dt);
    // damped fixed-point iteration for the mode of p(s, x; t, .)
    double mode = x;
    for (int i = 0; i < 100; ++i)
        mode += 0.7 * (x + dt * gamma() * lambda(t, mode) - mode);
    const double lam_scale =
        std::max({std::abs(lambda(t, mode - 14.0 * sd)), std::abs(lambda(t, mode)),
                  std::abs(lambda(t, mode + 14.0 * sd))});
    const double margin = 14.0 * sd + 3.0 * gamma() * dt * lam_scale + 1e-12;
    lo = std::min(x, mode) - margin;
    hi = std::max(x, mode) + margin;
}

double BridgeKernel::excess_integral(double t, double from, double to, double level) const {
    return integrate([&](double y) { return (y - level) / a(t, y); }, from, to);
}

double BridgeKernel::tail_time_integral(double t, double x) const {
    return integrate([&](double s) { return a(s, x); }, t, 1.0);
}

// ---------------------------------------------------------------------------
// AffineVolKernel

AffineVolKernel::AffineVolKernel(SignalModel model, double C)
    : BridgeKernel(std::move(model)), C_(C) {
    if (!(C_ > 0.0)) throw InvalidParameter("AffineVolKernel: C must be positive");
}

double AffineVolKernel::log_u(double t, double x) const {
    const double gtC = model_.gamma * t + C_;
    return 0.5 * model_.gamma * x * x / gtC - 0.5 * std::log(gtC / C_);
}

void AffineVolKernel::p_window(double s, double x, double t, double& lo, double& hi) const {
    // p(s, x; t, .) is Gaussian: mean x (gamma t + C)/(gamma s + C),
    // variance (t - s)(gamma t + C)/(gamma s + C).
    const double gtC = model_.gamma * t + C_;
    const double gsC = model_.gamma * s + C_;
    const double mean = x * gtC / gsC;
    const double sd = std::sqrt((t - s) * gtC / gsC);
    lo = mean - 14.0 * sd;
    hi = mean + 14.0 * sd;
}

double AffineVolKernel::excess_integral(double t, double from, double to, double level) const {
    const double gtC = model_.gamma * t + C_;
    const double df = from - level;
    const double dt_ = to - level;
    return 0.5 * gtC * (dt_ * dt_ - df * df);
}

double AffineVolKernel::tail_time_integral(double t, double /*x*/) const {
    return std::log((model_.gamma + C_) / (model_.gamma * t + C_)) / model_.gamma;
}

// ---------------------------------------------------------------------------
// QuadraticVolKernel

QuadraticVolKernel::QuadraticVolKernel(SignalModel model) : BridgeKernel(std::move(model)) {
    if (!model_.has_quad) throw InvalidParameter("QuadraticVolKernel: missing shape parameters");
    r_lo_ = model_.quad.root_lo;
    r_hi_ = model_.quad.root_hi;
    if (!(r_lo_ < 0.0 && 0.0 < r_hi_))
        throw InvalidParameter("QuadraticVolKernel: interval must contain 0");
    k_ = model_.gamma * (r_hi_ - r_lo_);
    h_ = model_.quad.b == 0.0 ? 0.0 : model_.gamma * model_.quad.b / (2.0 * model_.quad.delta);
    g0_ = std::log(-r_lo_ / r_hi_);
    time_const_ = model_.quad.b == 0.0;
}

double QuadraticVolKernel::g_state(double x) const {
    if (!(x > r_lo_ && x < r_hi_))
        throw DomainViolation("QuadraticVolKernel: state outside the interval");
    return std::log((x - r_lo_) / (r_hi_ - x));
}

double QuadraticVolKernel::lambda_from_g(double g) const {
    if (g >= 0.0) {
        const double q = std::exp(-g);
        return (r_lo_ * q + r_hi_) / (1.0 + q);
    }
    const double q = std::exp(g);
    return (r_lo_ + r_hi_ * q) / (1.0 + q);
}

double QuadraticVolKernel::v(double t, double x) const {
    return (g_state(x) - g0_) / k_ + h_ * t;
}

double QuadraticVolKernel::lambda(double t, double y) const {
    return lambda_from_g(k_ * (y - h_ * t) + g0_);
}

double QuadraticVolKernel::int_lambda_dx(double t, double x) const {
    const double c = g0_ - k_ * h_ * t;
    return r_lo_ * x + (r_hi_ - r_lo_) * (softplus(k_ * x + c) - softplus(c)) / k_;
}

double QuadraticVolKernel::time_norm(double t) const {
    const double g = model_.gamma;
    if (time_const_) {
        // lambda(s, 0) = 0, lambda_x(s, 0) = a(s, 0)
        return 0.5 * g * a(0.0, 0.0) * t;
    }
    return integrate(
        [&](double s) {
            const double l0 = lambda(s, 0.0);
            return 0.5 * g * a(s, l0) + 0.5 * g * g * l0 * l0;
        },
        0.0, t, {1e-12, 200'000});
}

double QuadraticVolKernel::log_u(double t, double x) const {
    return model_.gamma * int_lambda_dx(t, x) - time_norm(t);
}

void QuadraticVolKernel::p_window(double s, double x, double t, double& lo, double& hi) const {
    // lambda is bounded by the interval ends, so the h-tilt of the Gaussian
    // kernel shifts mass by at most gamma * rmax * (t - s).
    const double dt = t - s;
    const double rmax = std::max(-r_lo_, r_hi_);
    const double margin = 14.0 * std::sqrt(dt) + 3.0 * model_.gamma * rmax * dt + 1e-12;
    lo = x - margin;
    hi = x + margin;
}

double QuadraticVolKernel::excess_integral(double t, double from, double to,
                                           double level) const {
    if (!(from > r_lo_ && from < r_hi_ && to > r_lo_ && to < r_hi_))
        throw DomainViolation("excess_integral: bounds outside the interval");
    (void)t;
    const double span = r_hi_ - r_lo_;
    const double p = (r_hi_ - level) / span;
    const double q = (r_lo_ - level) / span;
    const auto F = [&](double y) {
        return (-p * std::log(r_hi_ - y) + q * std::log(y - r_lo_)) / model_.gamma;
    };
    return F(to) - F(from);
}

double QuadraticVolKernel::tail_time_integral(double t, double x) const {
    return (1.0 - t) * a(t, x);
}

// ---------------------------------------------------------------------------
// GenericKernel

double GenericKernel::time_shift(double t) const {
    if (t == 0.0) return 0.0;
    return integrate([&](double s) { return 0.5 * model_.a_x(s, 0.0); }, 0.0, t,
                     {1e-12, 200'000});
}

double GenericKernel::v(double t, double x) const {
    if (!state_interval().contains(x) && x != 0.0)
        throw DomainViolation("GenericKernel::v: state outside the interval");
    double space = 0.0;
    if (x != 0.0)
        space = integrate([&](double y) { return 1.0 / model_.a(t, y); }, 0.0, x,
                          {1e-12, 1'000'000});
    return space + time_shift(t);
}

double GenericKernel::lambda(double t, double y) const {
    return find_root_increasing([&](double x) { return v(t, x) - y; }, 0.0, state_interval());
}

double GenericKernel::log_u(double t, double x) const {
    const double g = model_.gamma;
    double space = 0.0;
    if (x != 0.0)
        space = g * integrate([&](double y) { return lambda(t, y); }, 0.0, x, {1e-10, 500'000});
    double time = 0.0;
    if (t != 0.0) {
        time = integrate(
            [&](double s) {
                const double l0 = lambda(s, 0.0);
                const double lx0 = model_.a(s, l0);  // lambda_x(s, 0) = a(s, lambda(s, 0))
                return 0.5 * g * lx0 + 0.5 * g * g * l0 * l0;
            },
            0.0, t, {1e-10, 500'000});
    }
    return space - time;
}

std::shared_ptr<BridgeKernel> make_kernel(const SignalModel& model) {
    if (model.has_affine()) return std::make_shared<AffineVolKernel>(model, model.affine_C);
    if (model.has_quad) return std::make_shared<QuadraticVolKernel>(model);
    return std::make_shared<GenericKernel>(model);
}

// ---------------------------------------------------------------------------
// equilibrium drift

double equilibrium_drift(const BridgeKernel& kernel, const PricingRule& rule, double t,
                         double xi, double z) {
    if (!(t < 1.0)) throw InvalidParameter("equilibrium_drift: t must be < 1");
    if (!kernel.state_interval().contains(xi) || !kernel.state_interval().contains(z))
        throw DomainViolation("equilibrium_drift: state outside the interval");
    const auto& model = kernel.model();
    const double Vt = model.V(t);
    const double Vmt = Vt - t;
    if (!(Vmt > 0.0)) throw InvalidParameter("equilibrium_drift: clock must stay above t");

    const double R = kernel.v(t, xi);
    const double U = kernel.v(Vt, z);
    const double gap = U - R;
    if (gap * gap > 1200.0 * Vmt) {
        // far outside the bridge funnel; confirm against the exact density
        const double log_rho =
            kernel.log_density_p(t, R, Vt, U) - std::log(kernel.a(Vt, z));
        if (log_rho < kLogUnderflow)
            throw DensityUnderflow("equilibrium_drift: transition density underflow");
    }
    const double score = gap / Vmt - model.gamma * kernel.lambda(t, R);
    const double w = rule.w(t, xi);
    const double a = kernel.a(t, xi);
    return (w / a) * score;
}

// ---------------------------------------------------------------------------
// PricingRule

double PricingRule::kw(double t, double x) const {
    if (mirror_kernel) return mirror_kernel->v(t, x);
    double space = 0.0;
    if (x != 0.0)
        space = integrate([&](double y) { return 1.0 / w(t, y); }, 0.0, x, {1e-12, 1'000'000});
    double time = 0.0;
    if (t != 0.0)
        time = integrate([&](double s) { return 0.5 * w_x(s, 0.0); }, 0.0, t, {1e-12, 200'000});
    return space + time;
}

double PricingRule::kw_inverse(double t, double k) const {
    if (mirror_kernel) {
        const double x = mirror_kernel->lambda(t, k);
        const auto& I = mirror_kernel->state_interval();
        if (!I.contains(x))  // saturated to an endpoint: k is unrepresentably deep
            throw OutOfRange("kw_inverse: value beyond the representable image");
        return x;
    }

    double time_part = 0.0;
    if (t != 0.0)
        time_part = integrate([&](double s) { return 0.5 * w_x(s, 0.0); }, 0.0, t,
                              {1e-13, 200'000});
    const double target = k - time_part;  // solve int_0^x dy / w(t, y) = target
    if (target == 0.0) return 0.0;
    const auto inv_w = [&](double y) { return 1.0 / w(t, y); };
    const double dir = target > 0.0 ? 1.0 : -1.0;
    const double end = dir > 0.0 ? state_interval.hi : state_interval.lo;

    // grow the bracket with incremental integrals so a bounded image shows up
    // as a plateau instead of a runaway quadrature
    double lo = 0.0, acc = 0.0, step = 1e-3;
    for (int iter = 0; iter < 200; ++iter) {
        const double cand = std::isinf(end) ? lo + dir * step : 0.5 * (lo + end);
        const double inc = integrate(inv_w, lo, cand, {1e-13, 200'000});
        if ((acc + inc - target) * dir >= 0.0) {
            double a = lo, b = cand, fa = acc;
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (a + b);
                const double fmid = fa + integrate(inv_w, a, mid, {1e-13, 200'000});
                if ((fmid - target) * dir >= 0.0) {
                    b = mid;
                } else {
                    a = mid;
                    fa = fmid;
                }
                if (std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(mid)))
                    return 0.5 * (a + b);
            }
            throw NoConvergence("kw_inverse: bisection budget exhausted");
        }
        acc += inc;
        lo = cand;
        step *= 2.0;
        if (std::abs(inc) < 1e-13 * std::max(1.0, std::abs(target)) || std::abs(lo) > 1e13)
            throw OutOfRange("kw_inverse: value beyond the image of the state interval");
    }
    throw OutOfRange("kw_inverse: value beyond the image of the state interval");
}

double PricingRule::jump_displacement(double t, double xi, double d_theta) const {
    if (d_theta == 0.0) return 0.0;
    return kw_inverse(t, kw(t, xi) + d_theta) - xi;
}

double PricingRule::excess_integral(double t, double from, double to, double level) const {
    if (mirror_kernel) return mirror_kernel->excess_integral(t, from, to, level);
    return integrate([&](double y) { return (y - level) / w(t, y); }, from, to);
}

double PricingRule::tail_time_integral(double t, double x) const {
    if (mirror_kernel) return mirror_kernel->tail_time_integral(t, x);
    return integrate([&](double s) { return w(s, x); }, t, 1.0);
}

double PricingRule::psi(double a, double t, double x) const {
    const double level = a - c;
    if (!state_interval.contains(level) || !state_interval.contains(x))
        throw DomainViolation("psi: state outside the interval");
    return excess_integral(t, level, x, level) + 0.5 * tail_time_integral(t, level);
}

PricingRule equilibrium_rule(const SignalModel& model,
                             std::shared_ptr<const BridgeKernel> kernel) {
    PricingRule rule;
    rule.w = model.a;
    rule.w_x = model.a_x;
    rule.w_xx = model.a_xx;
    rule.w_t = model.a_t;
    rule.c = 0.0;
    rule.state_interval = model.state_interval;
    rule.mirror_kernel = std::move(kernel);
    return rule;
}

PricingRule constant_rule(double w0, double c) {
    if (!(w0 > 0.0)) throw InvalidParameter("constant_rule: w must be positive");
    PricingRule rule;
    rule.w = [w0](double, double) { return w0; };
    rule.w_x = [](double, double) { return 0.0; };
    rule.w_xx = [](double, double) { return 0.0; };
    rule.w_t = [](double, double) { return 0.0; };
    rule.c = c;
    return rule;
}

void fill_missing_derivatives(SignalModel& model) {
    const auto a = model.a;
    if (!a) throw InvalidParameter("fill_missing_derivatives: a is required");
    if (!model.a_x)
        model.a_x = [a](double t, double x) {
            const double h = 1e-5 * (1.0 + std::abs(x));
            return (a(t, x + h) - a(t, x - h)) / (2.0 * h);
        };
    if (!model.a_xx)
        model.a_xx = [a](double t, double x) {
            const double h = 1e-5 * (1.0 + std::abs(x));
            return (a(t, x + h) - 2.0 * a(t, x) + a(t, x - h)) / (h * h);
        };
    if (!model.a_t)
        model.a_t = [a](double t, double x) {
            const double h = 1e-5 * (1.0 + std::abs(t));
            if (t - h < 0.0) return (a(t + h, x) - a(t, x)) / h;
            return (a(t + h, x) - a(t - h, x)) / (2.0 * h);
        };
}

std::string to_string(SignalKind kind) {
    switch (kind) {
        case SignalKind::DeterministicVol: return "deterministic";
        case SignalKind::Quadratic: return "quadratic";
        case SignalKind::Static: return "static";
        case SignalKind::Custom: return "custom";
    }
    return "unknown";
}

}  // namespace kyle
