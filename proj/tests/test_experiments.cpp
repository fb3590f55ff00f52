#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "vtax/calculators.hpp"
#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/experiments.hpp"
#include "vtax/parallel.hpp"

using namespace vtax;

TEST_CASE("phase transition: monotone, collapsed, crossing at order-one m*eps") {
    PhaseConfig cfg;
    cfg.seed = 1;
    const auto pts = phase_transition_experiment(cfg);
    CHECK(pts.size() == cfg.eps_grid.size() * cfg.m_eps_grid.size());
    for (double me : cfg.m_eps_grid) CHECK(phase_spread(pts, me) < 0.15);
    for (double eps : cfg.eps_grid) {
        double lo = 0, hi = 0;
        for (const auto& p : pts) {
            if (p.eps != eps) continue;
            CHECK(std::abs(p.power - p.exact_power) < 4 * p.power_se + 0.01);
            if (p.m_eps == 0.1) lo = p.power;
            if (p.m_eps == 10.0) hi = p.power;
        }
        CHECK(lo < hi);
    }
    PhaseConfig dense = cfg;
    dense.eps_grid = {0.05, 0.15};
    dense.m_eps_grid = {0.1, 0.3, 0.5, 1, 2, 3, 5, 7, 10};
    const auto dp = phase_transition_experiment(dense);
    for (double eps : dense.eps_grid) {
        const auto c = power_crossing(dp, eps);
        REQUIRE(c.has_value());
        CHECK(*c >= 0.5);
        CHECK(*c <= 5.0);
    }
    CHECK_FALSE(power_crossing(dp, 0.05, 1.01).has_value());
    PhaseConfig bad = cfg;
    bad.eps_grid.clear();
    CHECK_THROWS_AS(phase_transition_experiment(bad), InvalidParam);
}

TEST_CASE("constant-gap passive error decays at the parametric rate") {
    SlopeConfig cfg;
    cfg.k_grid = {0};
    cfg.seed = 2;
    const auto st = slope_study(cfg);
    REQUIRE(st.fits.size() == 1);
    CHECK(std::abs(st.fits[0].fit.slope + 0.5) < 0.08);
    // Oracle: with one bin the error is |mean(y) - mean(p) - gap|, whose mean
    // is about sqrt(2/pi) times the standard error of a Bernoulli mean.
    for (const auto& p : st.points) {
        CHECK(p.bins == 1);
        const double acc = 1 - cfg.eps - cfg.amplitude;
        const double se = std::sqrt(acc * (1 - acc) / static_cast<double>(p.m));
        CHECK(p.mean_error == doctest::Approx(std::sqrt(2 / std::numbers::pi) * se).epsilon(0.25));
    }
}

TEST_CASE("slope study guards") {
    SlopeConfig cfg;
    cfg.m_grid = {1000, 2000};
    CHECK_THROWS_AS(slope_study(cfg), InvalidParam);
    // A world that clips heavily aborts.
    auto w = sinusoid_world(0.4, 3, 0.15, 1);
    CHECK_THROWS_AS(passive_error(w, w.lipschitz(), 1000, 10, 1, true_ece(w)), ExperimentAborted);
}

TEST_CASE("pseudo-classifier control") {
    PseudoConfig cfg;
    cfg.m_grid = {500, cfg.N};
    cfg.replicates = 20;
    cfg.seed = 3;
    const auto c = pseudo_classifier_control(cfg);
    CHECK(c.data.size() == cfg.N);
    CHECK(c.eps_hat == doctest::Approx(std::floor(cfg.eps_target * cfg.N) / cfg.N));
    CHECK(c.full_ece >= 0.25);
    CHECK(c.full_ece <= 0.37);
    REQUIRE(c.points.size() == 2);
    const auto& full = c.points[1];
    CHECK(full.m == cfg.N);
    CHECK(std::memcmp(&full.mean_ece, &c.full_ece, sizeof(double)) == 0);
    CHECK(full.std_ece == 0.0);
    CHECK(c.points[0].floor == doctest::Approx(verification_floor(c.L_hat, c.eps_hat, 500)));
    CHECK(c.points[0].std_ece > 0.0);
}

TEST_CASE("single-stage pipeline costs the same as the equivalent sinusoid world") {
    // One warp of Lipschitz 2 at frequency 4 is the sinusoid with A = 1/(8 pi).
    // Costs at m ~ 50 carry ~15% seed noise, so compare means over seeds.
    double pipe = 0.0, single = 0.0;
    for (std::uint64_t s = 1; s <= 4; ++s) {
        CompositionConfig cfg;
        cfg.K_grid = {1};
        cfg.seed = s;
        const auto st = compositional_experiment(cfg);
        REQUIRE(st.points.size() == 1);
        CHECK(st.points[0].error_at_cost <= cfg.delta_target);
        pipe += static_cast<double>(st.points[0].cost);
        const auto w = sinusoid_world(1.0 / (8 * std::numbers::pi), 4, cfg.eps, 100 + s);
        single += static_cast<double>(
            passive_cost(w, w.lipschitz(), cfg.delta_target, cfg.m_min, cfg.m_max, cfg.replicates, 100 + s));
    }
    CHECK(std::abs(pipe - single) / single < 0.25);
}

TEST_CASE("composition cost grows with depth") {
    CompositionConfig cfg;
    cfg.K_grid = {1, 2, 3};
    cfg.replicates = 60;
    cfg.seed = 5;
    const auto st = compositional_experiment(cfg);
    CHECK(st.base > 1.3);
    for (const auto& p : st.points) CHECK(p.lipschitz_emp <= p.lipschitz_bound + 1e-6);
    CHECK_THROWS_AS(
        passive_cost(sinusoid_world(0.05, 3, 0.15), 0.94, 1e-4, 10, 1000, 20, 1), BudgetExceeded);
    CompositionConfig bad = cfg;
    bad.K_grid = {2, 3};
    CHECK_THROWS_AS(compositional_experiment(bad), InvalidParam);
}

TEST_CASE("experiment tables do not depend on the thread count") {
    SlopeConfig cfg;
    cfg.k_grid = {8};
    cfg.m_grid = {1000, 10000, 40000};
    cfg.replicates = 16;
    cfg.seed = 6;
    std::ostringstream a, b;
    write_csv(a, slope_study(cfg));
    set_max_threads(1);
    write_csv(b, slope_study(cfg));
    set_max_threads(0);
    CHECK(a.str() == b.str());
}
