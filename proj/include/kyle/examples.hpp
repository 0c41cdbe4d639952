#ifndef KYLE_EXAMPLES_HPP
#define KYLE_EXAMPLES_HPP

#include <functional>
#include <memory>

#include "kyle/kernel.hpp"
#include "kyle/model.hpp"

namespace kyle {

struct BuiltModel {
    SignalModel model;
    std::shared_ptr<BridgeKernel> kernel;
    PricingRule rule;
};

/**
 * Signal dZ = Sigma(t) d beta with Z_0 ~ N(0, q). Rewritten as a clocked
 * diffusion with a(t, x) = 1/(gamma t + C),
 *
 *   C      = (-gamma + sqrt(gamma^2 + 4 / (q + int_0^1 Sigma^2))) / 2
 *   m(t)   = 1/C - gamma q - gamma int_0^t Sigma^2
 *   V(t)   = 1/(gamma m(t)) - C/gamma,   sigma(t) = Sigma(t) / m(t)
 *
 * subject to q + int_0^t Sigma^2 > t / (C (C + gamma t)) on [0,1) and
 * Sigma(1) != m(1).
 */
struct DeterministicVolSpec {
    double gamma = 1.0;
    double q = 0.0;
    std::function<double(double)> Sigma;
    std::function<double(double)> Sigma_sq_int;  // int_0^t Sigma^2(s) ds

    static DeterministicVolSpec constant(double gamma, double q, double sigma_const);
};

/// Gaussian closed forms for the deterministic-volatility family, kept
/// independent of the h-transform code path so the two can cross-check.
struct DeterministicOracles {
    double gamma = 1.0;
    double C = 1.0;

    double G(double s, double t) const {
        return (t - s) / ((gamma * s + C) * (gamma * t + C));
    }
    double rho(double s, double y, double t, double x) const;
    double v(double t, double x) const { return (gamma * t + C) * x; }
    double lambda(double t, double y) const { return y / (gamma * t + C); }
    double u(double t, double x) const;
    double psi(double a, double t, double x) const;
    /// Equilibrium trading rate given the clock value V(t).
    double alpha(double t, double V_t, double xi, double z) const {
        return (z - xi) * (gamma * V_t + C) / (V_t - t);
    }
};

struct DeterministicBuild : BuiltModel {
    DeterministicOracles oracles;
    double C = 0.0;
    double total_variance = 0.0;  // q + int_0^1 Sigma^2
};

/// Throws AssumptionViolation naming the failed condition.
DeterministicBuild build_deterministic(const DeterministicVolSpec& spec);

/**
 * Signal dZ = (-delta Z^2 + b Z + d) d beta with 0 < |delta| < gamma and
 * d / delta > 0, clocked from the base diffusion with
 * a(t, x) = -gamma x^2 + (gamma b / delta) x + gamma d / delta on the
 * interval between the roots of a; V(t) = 1 - delta^2/gamma^2 (1 - t).
 */
struct QuadraticVolSpec {
    double gamma = 1.0;
    double delta = 0.5;
    double b = 0.0;
    double d = 0.5;
};

BuiltModel build_quadratic(const QuadraticVolSpec& spec);

/**
 * Static signal Z_t == eta_1 under the convention V == 1, built over the base
 * volatility a = 1/(gamma t + C). Passing clock_v0 < 1 instead attaches the
 * admissible clock V(t) = v0 + (1 - v0) t to the same base, yielding a
 * dynamic signal with the same terminal value; equilibria for different
 * clocks share the weighting function and the insider's value.
 */
struct StaticSpec {
    double gamma = 1.0;
    double base_C = 1.0;
};

BuiltModel build_static(const StaticSpec& spec, double clock_v0 = 1.0);

}  // namespace kyle

#endif
