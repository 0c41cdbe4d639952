#ifndef KYLE_NUMERICS_HPP
#define KYLE_NUMERICS_HPP

#include <functional>
#include <limits>

namespace kyle {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double x) const { return x > lo && x < hi; }
    bool is_whole_line() const;
};

/// Central difference of the given order (1 or 2) with O(h^2) error.
/// If a domain is supplied, throws DomainViolation when the stencil
/// [x - 2h, x + 2h] leaves it.
double finite_diff(const std::function<double(double)>& f, double x, int order, double h,
                   const Interval& domain = Interval{});

struct QuadratureOptions {
    double abs_tol = 1e-10;
    long max_evals = 1'000'000;
};

/// Adaptive Simpson integral of f over [a, b]. Throws QuadratureFailure when
/// the evaluation budget is exhausted before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 QuadratureOptions opts = {});

struct RootOptions {
    double rel_tol = 1e-12;
    int max_iter = 200;
};

/// Solves f(x) = 0 for continuous strictly increasing f. The bracket is grown
/// from x0 toward the domain endpoints, then bisection with a final secant
/// polish. Throws NoConvergence past the iteration budget, DomainViolation if
/// no bracket exists inside the domain.
double find_root_increasing(const std::function<double(double)>& f, double x0,
                            const Interval& domain, RootOptions opts = {});

}  // namespace kyle

#endif
