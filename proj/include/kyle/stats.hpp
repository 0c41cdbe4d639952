#ifndef KYLE_STATS_HPP
#define KYLE_STATS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace kyle {

/// Neumaier compensated accumulator; totals are independent of the order in
/// which path results are folded in, up to the compensation term itself.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    static double abs(double v) { return v < 0 ? -v : v; }
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;   // unbiased
    double se_mean = 0.0;    // sqrt(variance / n)
    double kurtosis = 0.0;   // excess
};

SampleStats summarize(std::span<const double> xs);

/// Pearson correlation of paired samples.
double correlation(std::span<const double> xs, std::span<const double> ys);

double normal_pdf(double x);
double normal_cdf(double x);

/// Two-sided Kolmogorov-Smirnov distance of the sample against the standard
/// normal CDF. Sorts a copy.
double ks_statistic_normal(std::span<const double> xs);

/// Asymptotic KS p-value with the Stephens small-sample correction.
double ks_pvalue(std::size_t n, double d);

struct BinStats {
    double center = 0.0;   // mean of the binning variable inside the bin
    double mean = 0.0;     // mean of the response inside the bin
    double se = 0.0;
    std::size_t n = 0;
};

/// Sorts pairs (key, response) by key and splits them into n_bins equal-mass
/// bins, returning per-bin response statistics.
std::vector<BinStats> equal_mass_bins(std::span<const double> keys,
                                      std::span<const double> responses,
                                      std::size_t n_bins);

}  // namespace kyle

#endif
