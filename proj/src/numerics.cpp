#include "kyle/numerics.hpp"

#include <cmath>

#include "kyle/errors.hpp"

namespace kyle {

bool Interval::is_whole_line() const {
    return std::isinf(lo) && lo < 0 && std::isinf(hi) && hi > 0;
}

double finite_diff(const std::function<double(double)>& f, double x, int order, double h,
                   const Interval& domain) {
    if (!(h > 0.0)) throw InvalidParameter("finite_diff: h must be positive");
    if (order != 1 && order != 2) throw InvalidParameter("finite_diff: order must be 1 or 2");
    if (!domain.contains(x - 2.0 * h) || !domain.contains(x + 2.0 * h))
        throw DomainViolation("finite_diff: stencil leaves the domain");
    if (order == 1) return (f(x + h) - f(x - h)) / (2.0 * h);
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

namespace {

struct SimpsonWorker {
    const std::function<double(double)>& f;
    long evals = 0;
    long max_evals;

    double eval(double x) {
        ++evals;
        return f(x);
    }

    // One level of adaptive Simpson with Richardson acceptance.
    double refine(double a, double b, double fa, double fm, double fb, double whole, double tol,
                  int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        if (evals + 2 > max_evals)
            throw QuadratureFailure("integrate: evaluation budget exhausted");
        const double flm = eval(lm);
        const double frm = eval(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (depth <= 0) {
            if (std::abs(delta) > 15.0 * tol)
                throw QuadratureFailure("integrate: recursion depth exhausted");
            return left + right + delta / 15.0;
        }
        if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
        return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
               refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 QuadratureOptions opts) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    SimpsonWorker w{f, 0, opts.max_evals};
    const double m = 0.5 * (a + b);
    const double fa = w.eval(a);
    const double fm = w.eval(m);
    const double fb = w.eval(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return sign * w.refine(a, b, fa, fm, fb, whole, opts.abs_tol, 52);
}

double find_root_increasing(const std::function<double(double)>& f, double x0,
                            const Interval& domain, RootOptions opts) {
    if (!domain.contains(x0)) throw DomainViolation("find_root_increasing: seed outside domain");
    double fx0 = f(x0);
    if (fx0 == 0.0) return x0;

    // Grow a bracket from the seed toward the relevant endpoint.
    double lo = x0, hi = x0, flo = fx0, fhi = fx0;
    double step = std::max(1e-4, 1e-4 * std::abs(x0));
    int grow = 0;
    if (fx0 > 0.0) {
        while (flo > 0.0) {
            if (++grow > 200) throw NoConvergence("find_root_increasing: bracket growth budget");
            hi = lo;
            double cand = lo - step;
            if (!(cand > domain.lo)) cand = 0.5 * (lo + domain.lo);  // halve toward finite endpoint
            if (!(cand < lo)) throw DomainViolation("find_root_increasing: no bracket in domain");
            lo = cand;
            flo = f(lo);
            step *= 2.0;
        }
        fhi = f(hi);
    } else {
        while (fhi < 0.0) {
            if (++grow > 200) throw NoConvergence("find_root_increasing: bracket growth budget");
            lo = hi;
            double cand = hi + step;
            if (!(cand < domain.hi)) cand = 0.5 * (hi + domain.hi);
            if (!(cand > hi)) throw DomainViolation("find_root_increasing: no bracket in domain");
            hi = cand;
            fhi = f(hi);
            step *= 2.0;
        }
        flo = f(lo);
    }

    for (int it = 0; it < opts.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if (fmid == 0.0) return mid;
        if (fmid > 0.0) {
            hi = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
        const double scale = std::max(1.0, std::abs(mid));
        if (hi - lo <= opts.rel_tol * scale) {
            // secant polish inside the final bracket
            const double denom = fhi - flo;
            if (denom != 0.0) {
                const double x = lo - flo * (hi - lo) / denom;
                if (x > lo && x < hi) return x;
            }
            return mid;
        }
    }
    throw NoConvergence("find_root_increasing: iteration budget exhausted");
}

}  // namespace kyle
