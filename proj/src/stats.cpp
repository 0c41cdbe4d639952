#include "kyle/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kyle/errors.hpp"

namespace kyle {

SampleStats summarize(std::span<const double> xs) {
    SampleStats s;
    s.n = xs.size();
    if (s.n == 0) return s;

    KahanSum acc;
    for (double x : xs) acc.add(x);
    s.mean = acc.value() / static_cast<double>(s.n);

    if (s.n < 2) return s;
    KahanSum m2, m4;
    for (double x : xs) {
        const double d = x - s.mean;
        m2.add(d * d);
        m4.add(d * d * d * d);
    }
    const double n = static_cast<double>(s.n);
    s.variance = m2.value() / (n - 1.0);
    s.se_mean = std::sqrt(s.variance / n);
    const double var_b = m2.value() / n;
    if (var_b > 0.0) s.kurtosis = (m4.value() / n) / (var_b * var_b) - 3.0;
    return s;
}

double correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw InvalidParameter("correlation: need matched samples of size >= 2");
    const auto sx = summarize(xs);
    const auto sy = summarize(ys);
    KahanSum cov;
    for (std::size_t i = 0; i < xs.size(); ++i)
        cov.add((xs[i] - sx.mean) * (ys[i] - sy.mean));
    const double denom = std::sqrt(sx.variance * sy.variance) * (static_cast<double>(xs.size()) - 1.0);
    return denom > 0.0 ? cov.value() / denom : 0.0;
}

double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

double ks_statistic_normal(std::span<const double> xs) {
    if (xs.empty()) throw InvalidParameter("ks_statistic_normal: empty sample");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = normal_cdf(sorted[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(f - lo, hi - f));
    }
    return d;
}

double ks_pvalue(std::size_t n, double d) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

std::vector<BinStats> equal_mass_bins(std::span<const double> keys,
                                      std::span<const double> responses,
                                      std::size_t n_bins) {
    if (keys.size() != responses.size())
        throw InvalidParameter("equal_mass_bins: size mismatch");
    if (n_bins == 0 || keys.size() < n_bins)
        throw InsufficientPaths("equal_mass_bins: fewer samples than bins");

    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

    std::vector<BinStats> bins(n_bins);
    const std::size_t total = keys.size();
    for (std::size_t b = 0; b < n_bins; ++b) {
        const std::size_t lo = b * total / n_bins;
        const std::size_t hi = (b + 1) * total / n_bins;
        std::vector<double> key_slice, resp_slice;
        key_slice.reserve(hi - lo);
        resp_slice.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            key_slice.push_back(keys[order[i]]);
            resp_slice.push_back(responses[order[i]]);
        }
        const auto ks = summarize(key_slice);
        const auto rs = summarize(resp_slice);
        bins[b].center = ks.mean;
        bins[b].mean = rs.mean;
        bins[b].se = rs.se_mean;
        bins[b].n = rs.n;
    }
    return bins;
}

}  // namespace kyle
