#ifndef KYLE_VALIDATE_HPP
#define KYLE_VALIDATE_HPP

#include <vector>

#include "kyle/model.hpp"
#include "kyle/report.hpp"

namespace kyle {

struct ValidationOptions {
    int grid_t = 200;            // time samples for the pointwise checks
    int grid_x = 50;             // state samples
    double pde_tol = 1e-8;       // PDE residual tolerance for a and w
    double v_range_bound = 1e6;  // |v| past which the image is considered unbounded
    double clock_end_tol = 1e-9;
    double epsilon = 9.5367431640625e-07;  // 2^-20, horizon for the V > t check
    double limit_tol = 1e-3;     // terminal bound for D^2 Lambda log Lambda
    int limit_k_min = 4;
    int limit_k_max = 24;
};

/// Pointwise checks of the model and pricing-rule assumptions. Failures are
/// report entries, never exceptions.
/// Entries: a_positive, a_pde, v_range, sigma_min, clock_terminal,
/// clock_above_t, limit_condition, w_positive, w_pde.
VerificationReport validate_assumptions(const SignalModel& model, const PricingRule& rule,
                                        const ValidationOptions& opts = {});

/// D(t)^2 Lambda(t) log Lambda(t) with D = exp(-int_0^t ds/(V(s)-s)) and
/// Lambda = int_0^t (1 + sigma^2)/D^2, evaluated in log space at
/// t = 1 - 2^-k for k = k_min..k_max.
std::vector<double> limit_condition_sequence(const SignalModel& model, int k_min, int k_max);

}  // namespace kyle

#endif
