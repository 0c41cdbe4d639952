#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kyle/errors.hpp"
#include "kyle/examples.hpp"
#include "kyle/stats.hpp"
#include "kyle/verify.hpp"

using namespace kyle;

namespace {

BatteryConfig small_battery(std::uint64_t seed) {
    BatteryConfig cfg;
    cfg.paths_major = 20000;
    cfg.paths_bridge = 300;
    cfg.grid_nodes = 1 << 12;
    cfg.seed = seed;
    return cfg;
}

const CheckEntry& entry(const VerificationReport& r, const std::string& name) {
    const auto* e = r.find(name);
    REQUIRE(e != nullptr);
    return *e;
}

}  // namespace

TEST_CASE("battery on the deterministic family") {
    auto det = build_deterministic(DeterministicVolSpec::constant(1.0, 0.01, 0.1));
    auto cfg = small_battery(8881);
    const auto report = run_battery(det, cfg);

    for (const auto& e : report.entries) {
        INFO(e.name, ": est=", e.estimate, " tol=", e.tolerance, " pass=", e.pass, " (", e.detail,
             ")");
        CHECK(e.satisfied());
    }
    CHECK(report.overall_pass());

    // the controls really do break their tests
    CHECK(entry(report, "rational_pricing_negative_control").pass == false);
    CHECK(entry(report, "rational_pricing_negative_control").estimate > 10.0);
    CHECK(entry(report, "brownian_negative_control").pass == false);
    // and the health checks really hold
    CHECK(entry(report, "rational_pricing").pass);
    CHECK(entry(report, "brownian").pass);
    CHECK(entry(report, "optimality").pass);
    CHECK(entry(report, "admissibility").pass);
    CHECK(entry(report, "bridge").pass);
    CHECK(entry(report, "density").pass);
    CHECK(entry(report, "exclusion_rate").estimate == 0.0);
}

TEST_CASE("battery on the quadratic family") {
    auto quad = build_quadratic(QuadraticVolSpec{1.0, 0.5, 0.0, 0.5});
    auto cfg = small_battery(40817);
    cfg.paths_major = 8000;
    cfg.grid_nodes = 1 << 11;
    const auto report = run_battery(quad, cfg);
    for (const auto& e : report.entries) {
        INFO(e.name, ": est=", e.estimate, " tol=", e.tolerance, " pass=", e.pass, " (", e.detail,
             ")");
        CHECK(e.satisfied());
    }
}

TEST_CASE("battery subset selection") {
    auto det = build_deterministic(DeterministicVolSpec::constant(1.0, 0.01, 0.1));
    auto cfg = small_battery(3);
    cfg.paths_bridge = 100;
    cfg.only = {"bridge"};
    const auto report = run_battery(det, cfg);
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].name == "bridge");

    // bitwise reproducibility of a repeated run
    const auto again = run_battery(det, cfg);
    CHECK(again.entries[0].estimate == report.entries[0].estimate);
    CHECK(again.entries[0].detail == report.entries[0].detail);
}

TEST_CASE("bridge: single level is vacuous but flagged") {
    auto det = build_deterministic(DeterministicVolSpec::constant(1.0, 0.01, 0.1));
    auto cfg = small_battery(5);
    cfg.paths_bridge = 100;
    cfg.grid_nodes = 1 << 10;
    cfg.bridge_epsilons = {0.5};
    const auto e = verify_bridge_convergence(det, cfg);
    CHECK(e.pass);
    CHECK(e.detail.find("insufficient levels") != std::string::npos);
}

TEST_CASE("admissibility: degenerate flat price gives weight exactly 1") {
    auto det = build_deterministic(DeterministicVolSpec::constant(1.0, 0.01, 0.1));
    SimResult fake;
    fake.n_paths = 200;
    fake.error.assign(200, PathError::None);
    fake.int_p_db.assign(200, 0.0);
    fake.int_p2_dt.assign(200, 0.0);
    fake.sliver_bound.assign(200, 0.0);
    auto cfg = small_battery(6);
    const auto e = verify_admissibility(fake, det, cfg);
    CHECK(e.pass);
    CHECK(e.detail.find("E[weight]=1+-0") != std::string::npos);  // exactly 1, zero spread
}

TEST_CASE("static invariance: the clock choice does not move the value") {
    StaticSpec spec{1.0, 1.0};
    const auto res = static_v_invariance(spec, 1.0, 0.5, 20000, 1 << 12,
                                         9.5367431640625e-07, 777);
    INFO("U_a=", res.u_hat_a, " U_b=", res.u_hat_b, " diff=", res.mean_diff, "+-", res.se_diff);
    CHECK(std::abs(res.mean_diff) <= 3.0 * res.se_diff);

    // identical choices agree path by path
    const auto same = static_v_invariance(spec, 0.5, 0.5, 500, 1 << 10,
                                          9.5367431640625e-07, 777);
    CHECK(same.mean_diff == 0.0);
    CHECK(same.se_diff == 0.0);
}

TEST_CASE("rational pricing holds at the starting checkpoint too") {
    auto det = build_deterministic(DeterministicVolSpec::constant(1.0, 0.01, 0.1));
    SimSpec spec;
    spec.model = &det.model;
    spec.kernel = det.kernel.get();
    spec.rule = &det.rule;
    spec.strategy = Strategy::equilibrium();
    spec.grid = make_grid(1.0 / 1024, 512, GridRefinement::GeometricTowardOne);
    spec.seed = 5150;
    spec.checkpoints = {0.0, 0.5};
    const auto run = simulate_paths(spec, 4000);
    REQUIRE(run.n_errors == 0);
    // at t = 0 the price is pinned at 0, so the gap is Z_0 itself
    std::vector<double> z0(run.n_paths);
    for (std::size_t i = 0; i < run.n_paths; ++i) {
        CHECK(run.xi_at(i, 0) == 0.0);
        z0[i] = run.z_at(i, 0);
    }
    const auto s = summarize(z0);
    CHECK(std::abs(s.mean) <= 3.0 * s.se_mean);
}

TEST_CASE("smaller risk aversion tightens the exponential-weight spread") {
    auto tame = build_deterministic(DeterministicVolSpec::constant(0.1, 0.01, 0.1));
    auto base = build_deterministic(DeterministicVolSpec::constant(1.0, 0.01, 0.1));
    const auto grid = make_grid(std::ldexp(1.0, -12), 2048, GridRefinement::GeometricTowardOne);
    double spread[2];
    const BuiltModel* models[2] = {&tame, &base};
    for (int i = 0; i < 2; ++i) {
        SimSpec spec;
        spec.model = &models[i]->model;
        spec.kernel = models[i]->kernel.get();
        spec.rule = &models[i]->rule;
        spec.strategy = Strategy::equilibrium();
        spec.grid = grid;
        spec.seed = 64;
        const auto run = simulate_paths(spec, 4000);
        REQUIRE(run.n_errors == 0);
        const double g = models[i]->model.gamma;
        std::vector<double> w;
        for (std::size_t p = 0; p < run.n_paths; ++p)
            w.push_back(std::exp(-g * run.int_p_db[p] - 0.5 * g * g * run.int_p2_dt[p]));
        const auto s = summarize(w);
        spread[i] = s.se_mean;
        CHECK(std::abs(s.mean - 1.0) <= 5.0 * s.se_mean);
    }
    CHECK(spread[0] < spread[1]);  // gamma = 0.1 vs gamma = 1
}

TEST_CASE("verify ops reject unusable inputs") {
    SimResult empty;
    empty.n_paths = 10;
    empty.error.assign(10, PathError::None);
    CHECK_THROWS_AS(verify_rational_pricing(empty, 20, 3.0, "x", false), InvalidParameter);
    empty.checkpoint_times = {0.5};
    empty.xi_cp.assign(10, 0.0);
    empty.z_cp.assign(10, 0.0);
    CHECK_THROWS_AS(verify_rational_pricing(empty, 20, 3.0, "x", false), InsufficientPaths);
    CHECK_THROWS_AS(verify_order_flow_brownian(empty, 3.0, 0.01, "x", false), InvalidParameter);
}
