#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kyle/errors.hpp"
#include "kyle/examples.hpp"
#include "kyle/numerics.hpp"
#include "kyle/validate.hpp"

using namespace kyle;

namespace {

DeterministicVolSpec default_det() { return DeterministicVolSpec::constant(1.0, 0.01, 0.1); }

bool entry_passes(const VerificationReport& r, const std::string& name) {
    const auto* e = r.find(name);
    REQUIRE(e != nullptr);
    return e->pass;
}

}  // namespace

TEST_CASE("deterministic constructor: closed-form constants") {
    auto det = build_deterministic(default_det());
    CHECK(det.C == doctest::Approx(0.5 * (-1.0 + std::sqrt(201.0))).epsilon(1e-14));
    CHECK(det.C == doctest::Approx(6.588723).epsilon(1e-6));
    CHECK(det.model.v0 == doctest::Approx(0.464733).epsilon(1e-5));
    CHECK(std::abs(det.model.V(1.0) - 1.0) < 1e-9);

    // constant-volatility feasibility margin: 2 Sigma^2 C gamma + C q gamma + Sigma^2 C^2 <= 1
    const double C = det.C, q = 0.01, S2 = 0.01;
    const double margin = 2.0 * S2 * C + C * q + S2 * C * C;
    CHECK(margin == doctest::Approx(0.632).epsilon(1e-2));
    CHECK(margin <= 1.0);

    // clock speed squared equals sigma^2 pointwise
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double dV = finite_diff(det.model.V, t, 1, 1e-6);
        const double sig = det.model.sigma(t);
        CHECK(dV == doctest::Approx(sig * sig).epsilon(1e-8));
    }

    // G(s, s) = 0
    CHECK(det.oracles.G(0.3, 0.3) == 0.0);
}

TEST_CASE("deterministic constructor: infeasible parameters rejected") {
    CHECK_THROWS_AS(build_deterministic(DeterministicVolSpec::constant(1.0, 0.0, 1.0)),
                    AssumptionViolation);
    // the standing inequality really does fail mid-interval for that spec:
    // C (C + t) < 1 on (0, 1) when C^2 + C = 1
    const double C = 0.5 * (-1.0 + std::sqrt(5.0));
    CHECK(C * (C + 0.5) < 1.0);

    CHECK_THROWS_AS(build_deterministic(DeterministicVolSpec::constant(-1.0, 0.01, 0.1)),
                    AssumptionViolation);
    CHECK_THROWS_AS(build_deterministic(DeterministicVolSpec::constant(1.0, -0.5, 0.1)),
                    AssumptionViolation);
}

TEST_CASE("quadratic constructor") {
    auto quad = build_quadratic(QuadraticVolSpec{1.0, 0.5, 0.0, 0.5});
    CHECK(quad.model.a(0.0, 0.3) == doctest::Approx(1.0 - 0.09).epsilon(1e-14));
    CHECK(quad.model.state_interval.lo == doctest::Approx(-1.0));
    CHECK(quad.model.state_interval.hi == doctest::Approx(1.0));
    CHECK(quad.model.v0 == doctest::Approx(0.75));
    CHECK(quad.model.V(0.4) == doctest::Approx(0.75 + 0.25 * 0.4).epsilon(1e-15));
    CHECK(quad.model.sigma(0.2) == doctest::Approx(0.5));
    CHECK(quad.model.V(1.0) == 1.0);

    // a_t / a^2 + a_xx / 2 = -gamma exactly
    for (double t : {0.0, 0.5, 1.0}) {
        for (double x : {-0.9, -0.2, 0.0, 0.6}) {
            const double a = quad.model.a(t, x);
            const double resid = quad.model.a_t(t, x) / (a * a) +
                                 0.5 * quad.model.a_xx(t, x) + quad.model.gamma;
            CHECK(std::abs(resid) < 1e-14);
        }
    }

    CHECK_THROWS_AS(build_quadratic(QuadraticVolSpec{1.0, 1.5, 0.0, 0.5}), AssumptionViolation);
    CHECK_THROWS_AS(build_quadratic(QuadraticVolSpec{1.0, 0.5, 0.0, -0.5}), AssumptionViolation);
}

TEST_CASE("static constructor and its clock functions") {
    auto st = build_static(StaticSpec{1.0, 1.0});
    CHECK(st.model.kind == SignalKind::Static);
    CHECK(st.model.sigma(0.5) == 0.0);
    CHECK(st.model.V(0.5) == 1.0);

    // D(t) = exp(-int ds/(V - s)) and Lambda = int (1 + sigma^2)/D^2, computed
    // here by direct quadrature as the oracle
    const double A = integrate([&](double s) { return 1.0 / (st.model.V(s) - s); }, 0.0, 0.5);
    CHECK(std::exp(-A) == doctest::Approx(0.5).epsilon(1e-10));
    const double Lambda = integrate(
        [&](double s) {
            const double As = integrate([&](double r) { return 1.0 / (st.model.V(r) - r); }, 0.0, s);
            const double sig = st.model.sigma(s);
            return (1.0 + sig * sig) * std::exp(2.0 * As);
        },
        0.0, 0.5, {1e-10, 500'000});
    CHECK(Lambda == doctest::Approx(1.0).epsilon(1e-8));

    // limit sequence matches the closed form t (1 - t) log(t / (1 - t)) and
    // decreases below 1e-4 by k = 20
    const auto seq = limit_condition_sequence(st.model, 4, 20);
    REQUIRE(seq.size() == 17);
    for (int i = 0; i < 17; ++i) {
        const int k = 4 + i;
        const double t = 1.0 - std::ldexp(1.0, -k);
        const double closed = t * (1.0 - t) * std::log(t / (1.0 - t));
        CHECK(seq[i] == doctest::Approx(closed).epsilon(1e-6));
        if (i > 0) CHECK(seq[i] < seq[i - 1]);
    }
    CHECK(seq.back() < 1e-4);

    CHECK_THROWS_AS(build_static(StaticSpec{0.0, 1.0}), AssumptionViolation);
    CHECK_THROWS_AS(build_static(StaticSpec{1.0, -1.0}), AssumptionViolation);
    CHECK_THROWS_AS(build_static(StaticSpec{1.0, 1.0}, 1.5), AssumptionViolation);
}

TEST_CASE("limit evaluator agrees with a brute-force oracle") {
    auto det = build_deterministic(default_det());
    const int k = 6;
    const double t = 1.0 - std::ldexp(1.0, -k);
    // brute force: composite Simpson with a dense fixed grid
    const int n = 20000;
    std::vector<double> As(n + 1);
    const double h = t / n;
    for (int i = 0; i + 2 <= n; i += 2) {
        auto f = [&](double s) { return 1.0 / (det.model.V(s) - s); };
        const double s0 = i * h;
        As[i + 1] = As[i] + h / 6.0 * (f(s0) + 4.0 * f(s0 + 0.5 * h) + f(s0 + h));
        As[i + 2] = As[i] + h / 3.0 * (f(s0) + 4.0 * f(s0 + h) + f(s0 + 2.0 * h));
    }
    double Lambda = 0.0;
    for (int i = 0; i + 2 <= n; i += 2) {
        auto g = [&](int j) {
            const double s = j * h;
            const double sig = det.model.sigma(s);
            return (1.0 + sig * sig) * std::exp(2.0 * As[j]);
        };
        Lambda += h / 3.0 * (g(i) + 4.0 * g(i + 1) + g(i + 2));
    }
    const double oracle = std::exp(-2.0 * As[n]) * Lambda * std::log(Lambda);
    const auto seq = limit_condition_sequence(det.model, k, k);
    REQUIRE(seq.size() == 1);
    CHECK(seq[0] == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("validator: healthy models pass") {
    auto det = build_deterministic(default_det());
    auto report = validate_assumptions(det.model, det.rule);
    for (const auto& e : report.entries) {
        INFO(e.name, ": ", e.estimate, " tol ", e.tolerance, " (", e.detail, ")");
        CHECK(e.pass);
    }
    CHECK(report.overall_pass());
    // closed-form derivatives: residual at rounding level
    CHECK(report.find("a_pde")->estimate < 1e-10);
    CHECK(report.find("w_pde")->estimate < 1e-10);

    auto quad = build_quadratic(QuadraticVolSpec{1.0, 0.5, 0.0, 0.5});
    auto qreport = validate_assumptions(quad.model, quad.rule);
    for (const auto& e : qreport.entries) {
        INFO(e.name, ": ", e.estimate, " (", e.detail, ")");
        CHECK(e.pass);
    }
    CHECK(qreport.find("a_pde")->estimate < 1e-13);

    auto st = build_static(StaticSpec{1.0, 1.0});
    auto sreport = validate_assumptions(st.model, st.rule, [] {
        ValidationOptions o;
        o.limit_tol = 1e-4;
        return o;
    }());
    for (const auto& e : sreport.entries) {
        INFO(e.name, ": ", e.estimate, " (", e.detail, ")");
        CHECK(e.pass);
    }

    auto alt = build_static(StaticSpec{1.0, 1.0}, 0.5);  // clock V = 0.5 + 0.5 t
    CHECK(validate_assumptions(alt.model, alt.rule).overall_pass());
}

TEST_CASE("custom model with finite-difference derivatives") {
    // same volatility as the quadratic family, but handed over as a bare
    // function; the validator then leans on the difference stencils
    auto quad = build_quadratic(QuadraticVolSpec{1.0, 0.5, 0.0, 0.5});
    SignalModel bare = quad.model;
    bare.kind = SignalKind::Custom;
    bare.a_x = nullptr;
    bare.a_xx = nullptr;
    bare.a_t = nullptr;
    fill_missing_derivatives(bare);
    CHECK(bare.a_x(0.2, 0.3) == doctest::Approx(-0.6).epsilon(1e-8));
    CHECK(bare.a_xx(0.2, 0.3) == doctest::Approx(-2.0).epsilon(1e-4));
    CHECK(bare.a_t(0.2, 0.3) == doctest::Approx(0.0).epsilon(1e-6));

    ValidationOptions loose;
    loose.pde_tol = 1e-4;  // difference-stencil floor
    auto report = validate_assumptions(bare, quad.rule, loose);
    CHECK(report.find("a_pde")->pass);
    CHECK(report.find("a_pde")->estimate < 1e-4);
}

TEST_CASE("validator: tampered weighting function fails the PDE check") {
    auto det = build_deterministic(default_det());
    auto tampered = constant_rule(1.0);
    auto report = validate_assumptions(det.model, tampered);
    CHECK_FALSE(entry_passes(report, "w_pde"));
    CHECK(report.find("w_pde")->estimate == doctest::Approx(det.model.gamma).epsilon(1e-12));
    CHECK(entry_passes(report, "a_pde"));  // the signal side is untouched
    CHECK_FALSE(report.overall_pass());
}
