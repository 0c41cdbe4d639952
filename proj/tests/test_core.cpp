#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kyle/errors.hpp"
#include "kyle/grid.hpp"
#include "kyle/numerics.hpp"
#include "kyle/rng.hpp"
#include "kyle/stats.hpp"

using namespace kyle;

TEST_CASE("uniform grid nodes") {
    const double eps = std::ldexp(1.0, -10);
    const auto g = make_grid(eps, 4, GridRefinement::Uniform);
    REQUIRE(g.size() == 4);
    CHECK(g.nodes[0] == 0.0);
    CHECK(g.nodes[1] == doctest::Approx((1.0 - eps) / 3.0).epsilon(1e-15));
    CHECK(g.nodes[2] == doctest::Approx(2.0 * (1.0 - eps) / 3.0).epsilon(1e-15));
    CHECK(g.nodes[3] == 1.0 - eps);

    const auto g2 = make_grid(0.5, 2, GridRefinement::Uniform);
    REQUIRE(g2.size() == 2);
    CHECK(g2.nodes[0] == 0.0);
    CHECK(g2.nodes[1] == 0.5);
}

TEST_CASE("geometric grid spacing law") {
    const double eps = std::ldexp(1.0, -20);
    const std::size_t n = 1 << 16;
    const auto g = make_grid(eps, n, GridRefinement::GeometricTowardOne);
    REQUIRE(g.size() == n);
    const double first = g.dt(0);
    const double last = g.dt(n - 2);
    CHECK(last < first);
    // spacing ratio recomputed from dt_k = (1 - t_k)(1 - eps^(1/(n-1)))
    const double ratio = last / first;
    CHECK(std::abs(ratio - eps) / eps < 0.10);

    // dt_k proportional to distance from 1
    for (std::size_t k : {std::size_t{0}, n / 4, n / 2, n - 2}) {
        const double prop = g.dt(k) / (1.0 - g.nodes[k]);
        const double prop0 = g.dt(0) / (1.0 - g.nodes[0]);
        CHECK(prop == doctest::Approx(prop0).epsilon(1e-9));
    }
}

TEST_CASE("grid parameter validation") {
    CHECK_THROWS_AS(make_grid(0.0, 4, GridRefinement::Uniform), InvalidParameter);
    CHECK_THROWS_AS(make_grid(1.0, 4, GridRefinement::Uniform), InvalidParameter);
    CHECK_THROWS_AS(make_grid(0.5, 1, GridRefinement::Uniform), InvalidParameter);
}

TEST_CASE("grid splicing and node lookup") {
    auto g = make_grid(1.0 / 16, 9, GridRefinement::GeometricTowardOne);
    auto g2 = g.with_times({0.25, 0.5, 0.75});
    CHECK(std::is_sorted(g2.nodes.begin(), g2.nodes.end()));
    CHECK(g2.nodes[g2.index_of(0.5)] == 0.5);
    CHECK(g2.nodes.front() == 0.0);
    CHECK(g2.nodes.back() == g.horizon());
    CHECK_THROWS_AS(g2.index_of(0.123456), InconsistentBundle);
    CHECK_THROWS_AS(g.with_times({2.0}), InvalidParameter);
}

TEST_CASE("finite differences") {
    auto sq = [](double x) { return x * x; };
    CHECK(std::abs(finite_diff(sq, 1.0, 1, 1e-4) - 2.0) < 1e-8);
    CHECK(std::abs(finite_diff(sq, 0.0, 2, 1e-3) - 2.0) < 1e-10);
    CHECK(std::abs(finite_diff([](double x) { return std::sin(x); }, 0.3, 1, 1e-4) -
                   std::cos(0.3)) < 1e-8);

    // exact to rounding on polynomials of degree <= 2
    NormalStream rng(7, 0, 0);
    for (int i = 0; i < 50; ++i) {
        const double a = rng.next_normal(), b = rng.next_normal(), c = rng.next_normal();
        const double x = rng.next_normal();
        auto poly = [&](double y) { return a * y * y + b * y + c; };
        CHECK(finite_diff(poly, x, 1, 1e-3) == doctest::Approx(2 * a * x + b).epsilon(1e-7));
        CHECK(finite_diff(poly, x, 2, 1e-2) == doctest::Approx(2 * a).epsilon(1e-7));
    }

    CHECK_THROWS_AS(finite_diff(sq, 0.1, 1, 0.2, Interval{0.0, 1.0}), DomainViolation);
    CHECK_THROWS_AS(finite_diff(sq, 0.0, 3, 1e-4), InvalidParameter);
}

TEST_CASE("rng substreams reproduce bit-for-bit") {
    RngContract rng{123456789ULL};
    auto s1 = rng.stream(42, 0);
    auto s2 = rng.stream(42, 0);
    for (int i = 0; i < 1000; ++i) CHECK(s1.next_normal() == s2.next_normal());

    auto s3 = rng.stream(43, 0);
    auto s4 = rng.stream(42, 1);
    int same3 = 0, same4 = 0;
    auto s5 = rng.stream(42, 0);
    for (int i = 0; i < 1000; ++i) {
        const double base = s5.next_normal();
        if (base == s3.next_normal()) ++same3;
        if (base == s4.next_normal()) ++same4;
    }
    CHECK(same3 == 0);
    CHECK(same4 == 0);
}

TEST_CASE("normal stream moments") {
    NormalStream s(2024, 11, 0);
    const int n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = s.next_normal();
    const auto stats = summarize(xs);
    CHECK(std::abs(stats.mean) < 3.0 * stats.se_mean);
    CHECK(std::abs(stats.variance - 1.0) < 3.0 * std::sqrt(2.0 / n));
    const double d = ks_statistic_normal(xs);
    CHECK(ks_pvalue(n, d) > 0.01);
}

TEST_CASE("compensated summation") {
    // pattern that cancels catastrophically under naive accumulation
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) {
        xs.push_back(1e16);
        xs.push_back(3.14159);
        xs.push_back(-1e16);
    }
    KahanSum acc;
    for (double x : xs) acc.add(x);
    CHECK(acc.value() == doctest::Approx(100000 * 3.14159).epsilon(1e-12));

    double naive = 0.0;
    for (double x : xs) naive += x;
    CHECK(std::abs(naive - 100000 * 3.14159) > 1.0);  // the naive sum really is broken
}

TEST_CASE("summary statistics") {
    std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 5.0};
    const auto s = summarize(xs);
    CHECK(s.mean == doctest::Approx(3.0));
    CHECK(s.variance == doctest::Approx(2.5));
    CHECK(s.se_mean == doctest::Approx(std::sqrt(0.5)));

    std::vector<double> ys{2.0, 4.0, 6.0, 8.0, 10.0};
    CHECK(correlation(xs, ys) == doctest::Approx(1.0));
}

TEST_CASE("normal distribution helpers") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
}

TEST_CASE("equal mass bins") {
    std::vector<double> keys(100), resp(100);
    for (int i = 0; i < 100; ++i) {
        keys[i] = static_cast<double>(99 - i);  // reversed order
        resp[i] = 2.0 * keys[i];
    }
    const auto bins = equal_mass_bins(keys, resp, 20);
    REQUIRE(bins.size() == 20);
    for (const auto& b : bins) CHECK(b.n == 5);
    CHECK(bins.front().center < bins.back().center);
    CHECK(bins.front().mean == doctest::Approx(2.0 * bins.front().center));
    CHECK_THROWS_AS(equal_mass_bins(std::vector<double>(5, 0.0), std::vector<double>(5, 0.0), 10),
                    InsufficientPaths);
}

TEST_CASE("adaptive quadrature") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(integrate([](double x) { return normal_pdf(x); }, -10.0, 10.0) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(integrate([](double x) { return std::exp(-x); }, 1.0, 0.0) ==
          doctest::Approx(-(1.0 - std::exp(-1.0))).epsilon(1e-12));
    // needle the budget cannot resolve
    CHECK_THROWS_AS(integrate([](double x) { return normal_pdf(x * 1e8) * 1e8; }, -1.0, 1.0,
                              {1e-14, 100}),
                    QuadratureFailure);
}

TEST_CASE("bracketed root finding") {
    auto f = [](double x) { return x * x * x - 8.0; };
    CHECK(find_root_increasing(f, 0.1, Interval{}) == doctest::Approx(2.0).epsilon(1e-12));
    // seed far from the root on both sides
    CHECK(find_root_increasing(f, 100.0, Interval{}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(find_root_increasing(f, -50.0, Interval{}) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(find_root_increasing(f, -1.0, Interval{0.0, 1.0}), DomainViolation);
    CHECK_THROWS_AS(
        find_root_increasing([](double x) { return x * x + 1.0; }, 0.5, Interval{0.0, 1e300}),
        NoConvergence);
}
