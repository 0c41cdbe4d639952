#ifndef KYLE_MODEL_HPP
#define KYLE_MODEL_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include "kyle/numerics.hpp"

namespace kyle {

enum class SignalKind { DeterministicVol, Quadratic, Static, Custom };

std::string to_string(SignalKind kind);

/**
 * The insider signal Z_t = eta_{V(t)} is described by the volatility a of the
 * base diffusion d eta = a(t, eta) d beta on the state interval I, the clock
 * V(t) = v0 + int_0^t sigma^2, and the risk-aversion coefficient gamma tying
 * a to the constraint a_t / a^2 + a_xx / 2 = -gamma.
 */
struct SignalModel {
    double gamma = 1.0;
    SignalKind kind = SignalKind::Custom;
    Interval state_interval;

    // volatility of the base diffusion and its partials on [0,1] x I
    std::function<double(double, double)> a;
    std::function<double(double, double)> a_x;
    std::function<double(double, double)> a_xx;
    std::function<double(double, double)> a_t;

    std::function<double(double)> sigma;  // clock speed, sigma(t) >= 0
    std::function<double(double)> V;      // clock, V(1) = 1, V(t) > t on [0,1)
    double v0 = 0.0;

    // family parameters enabling closed-form transform stacks
    double affine_C = std::numeric_limits<double>::quiet_NaN();  // a = 1/(gamma t + C)
    struct QuadShape {
        double delta = 0.0, b = 0.0, d = 0.0;
        double root_lo = 0.0, root_hi = 0.0;  // zeros of a in x; I = (root_lo, root_hi)
    } quad;
    bool has_quad = false;

    bool has_affine() const { return std::isfinite(affine_C); }
};

/// Populates any missing partials of a by central differences with step
/// h = 1e-5 (1 + |x|); closed forms always win when supplied.
void fill_missing_derivatives(SignalModel& model);

class BridgeKernel;

/**
 * Weighting function of the pricing rule plus the price offset c. In
 * equilibrium w coincides with the signal volatility a; mirror_kernel is set
 * in that case so block-trade pricing and the value function reuse the
 * kernel's closed forms.
 */
struct PricingRule {
    std::function<double(double, double)> w;
    std::function<double(double, double)> w_x;
    std::function<double(double, double)> w_xx;
    std::function<double(double, double)> w_t;
    double c = 0.0;
    Interval state_interval;
    std::shared_ptr<const BridgeKernel> mirror_kernel;  // null for custom/tampered rules

    /// K_w(t, x) = int_0^x dy / w(t, y) + int_0^t w_x(s, 0) / 2 ds.
    double kw(double t, double x) const;
    /// Inverse of kw in x; throws OutOfRange beyond the image of I.
    double kw_inverse(double t, double k) const;
    /// Price displacement of a block trade: K_w^{-1}(t, K_w(t, xi) + d_theta) - xi.
    double jump_displacement(double t, double xi, double d_theta) const;

    /// int_from^to (y - level) / w(t, y) dy, the block-trade excess cost.
    double excess_integral(double t, double from, double to, double level) const;
    /// int_t^1 w(s, x) ds.
    double tail_time_integral(double t, double x) const;

    /// Value function: psi(a, t, x) = excess over [a - c, x] + tail / 2.
    double psi(double a, double t, double x) const;
};

/// Pricing rule with w == a and c == 0, backed by the kernel's closed forms.
PricingRule equilibrium_rule(const SignalModel& model,
                             std::shared_ptr<const BridgeKernel> kernel);

/// Constant weighting function (violates the PDE constraint unless gamma = 0);
/// used as a negative control.
PricingRule constant_rule(double w0, double c = 0.0);

}  // namespace kyle

#endif
