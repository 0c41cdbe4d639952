#ifndef KYLE_KERNEL_HPP
#define KYLE_KERNEL_HPP

#include <memory>

#include "kyle/model.hpp"

namespace kyle {

/**
 * Transform stack of the bridge construction:
 *
 *   v(t, x)      = int_0^x dy / a(t, y) + int_0^t a_x(s, 0) / 2 ds
 *   lambda(t, .) = inverse of v(t, .) in x
 *   u(t, x)      = exp{ int_0^x gamma lambda(t, y) dy
 *                       - int_0^t (gamma lambda_x(s,0)/2 + gamma^2 lambda^2(s,0)/2) ds }
 *
 * u is space-time harmonic (u_t + u_xx / 2 = 0) and normalized so u(0,0) = 1.
 * Transition densities follow by h-transform of the Gaussian kernel:
 *
 *   p(s, x; t, y)   = u(t, y) Gamma(s, x, t, y) / u(s, x)
 *   rho(s, y; t, z) = p(s, v(s,y); t, v(t,z)) / a(t, z)
 *
 * where rho is the transition density of the base diffusion eta.
 */
class BridgeKernel {
public:
    explicit BridgeKernel(SignalModel model) : model_(std::move(model)) {}
    virtual ~BridgeKernel() = default;

    const SignalModel& model() const { return model_; }
    double gamma() const { return model_.gamma; }
    const Interval& state_interval() const { return model_.state_interval; }

    virtual double a(double t, double x) const = 0;
    virtual double v(double t, double x) const = 0;
    virtual double lambda(double t, double y) const = 0;
    virtual double log_u(double t, double x) const = 0;
    double u(double t, double x) const { return std::exp(log_u(t, x)); }

    /// d/dx log p(s, x; t, y) = (y - x)/(t - s) - gamma lambda(s, x).
    double score_p(double s, double x, double t, double y) const {
        return (y - x) / (t - s) - model_.gamma * lambda(s, x);
    }

    double density_p(double s, double x, double t, double y) const;
    double log_density_p(double s, double x, double t, double y) const;
    double density_rho(double s, double y, double t, double z) const;

    /// [lo, hi] window in y capturing the mass of p(s, x; t, .) to beyond
    /// quadrature tolerance.
    virtual void p_window(double s, double x, double t, double& lo, double& hi) const;

    /// int_from^to (y - level) / a(t, y) dy  (w = a route for the value function).
    virtual double excess_integral(double t, double from, double to, double level) const;
    /// int_t^1 a(s, x) ds.
    virtual double tail_time_integral(double t, double x) const;

    /// True when v(t, .) maps I onto the whole real line by construction.
    virtual bool v_range_is_whole_line() const { return false; }

protected:
    SignalModel model_;
};

/// a(t, x) = 1 / (gamma t + C) on I = R. Everything is closed form.
class AffineVolKernel : public BridgeKernel {
public:
    AffineVolKernel(SignalModel model, double C);

    double a(double t, double) const override { return 1.0 / (model_.gamma * t + C_); }
    double v(double t, double x) const override { return (model_.gamma * t + C_) * x; }
    double lambda(double t, double y) const override { return y / (model_.gamma * t + C_); }
    double log_u(double t, double x) const override;
    void p_window(double s, double x, double t, double& lo, double& hi) const override;
    double excess_integral(double t, double from, double to, double level) const override;
    double tail_time_integral(double t, double x) const override;
    bool v_range_is_whole_line() const override { return true; }

    double C() const { return C_; }

private:
    double C_;
};

/// a(t, x) = -gamma x^2 + (gamma b / delta) x + gamma d / delta on the
/// interval between the two real roots. v integrates by partial fractions to
/// a scaled log-odds, so lambda is a logistic expression.
class QuadraticVolKernel : public BridgeKernel {
public:
    explicit QuadraticVolKernel(SignalModel model);

    double a(double, double x) const override {
        return model_.gamma * (r_hi_ - x) * (x - r_lo_);
    }
    double v(double t, double x) const override;
    double lambda(double t, double y) const override;
    double log_u(double t, double x) const override;
    void p_window(double s, double x, double t, double& lo, double& hi) const override;
    double excess_integral(double t, double from, double to, double level) const override;
    double tail_time_integral(double t, double x) const override;
    bool v_range_is_whole_line() const override { return true; }

private:
    double g_state(double x) const;                  // log-odds coordinate of x in I
    double lambda_from_g(double g) const;
    double int_lambda_dx(double t, double x) const;  // int_0^x lambda(t, y) dy
    double time_norm(double t) const;                // time part of log u

    double r_lo_ = 0.0, r_hi_ = 0.0;
    double k_ = 0.0;       // gamma (r_hi - r_lo)
    double h_ = 0.0;       // gamma b / (2 delta): time drift of the log-odds
    double g0_ = 0.0;      // log(-r_lo / r_hi)
    bool time_const_ = false;  // b == 0: lambda does not depend on t
};

/// Quadrature/root-finding fallback for custom volatilities. Correct but
/// slow; the closed-form kernels above are preferred wherever they apply.
class GenericKernel : public BridgeKernel {
public:
    explicit GenericKernel(SignalModel model) : BridgeKernel(std::move(model)) {}

    double a(double t, double x) const override { return model_.a(t, x); }
    double v(double t, double x) const override;
    double lambda(double t, double y) const override;
    double log_u(double t, double x) const override;

private:
    double time_shift(double t) const;  // int_0^t a_x(s, 0) / 2 ds
};

/// Picks the closed-form kernel matching the model family, else the generic one.
std::shared_ptr<BridgeKernel> make_kernel(const SignalModel& model);

/// Insider trading rate in equilibrium:
///   alpha = w(t, xi) * rho_x(t, xi, V(t), z) / rho(t, xi, V(t), z),
/// evaluated in transformed coordinates as
///   [w/a](t, xi) * [ (U - R)/(V(t) - t) - gamma lambda(t, R) ]
/// with R = v(t, xi), U = v(V(t), z). Throws DensityUnderflow (as
/// domain_error) when rho < 1e-300.
double equilibrium_drift(const BridgeKernel& kernel, const PricingRule& rule, double t,
                         double xi, double z);

struct DensityUnderflow : std::domain_error {
    using std::domain_error::domain_error;
};

constexpr double kDensityUnderflowThreshold = 1e-300;

}  // namespace kyle

#endif
