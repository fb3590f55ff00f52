#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "vtax/error.hpp"
#include "vtax/parallel.hpp"
#include "vtax/temp_scaling.hpp"

using namespace vtax;

TEST_CASE("MLE near 1 at the asymptotic-normality scale") {
    const std::size_t m = 2000;
    const int reps = 200;
    std::vector<int> inside(reps);
    parallel_for(inside.size(), [&](std::size_t r) {
        Rng rng(1, {r});
        const auto d = sample_temperature_world(m, 1.0, ScoreLaw::beta(0.1), rng);
        const auto f = fit_temperature(d);
        inside[r] = std::abs(f.t_hat - 1.0) <= 3.0 / std::sqrt(m * f.fisher_info_at_1) ? 1 : 0;
    });
    CHECK(std::count(inside.begin(), inside.end(), 1) >= 160);
}

TEST_CASE("recovers a non-unit temperature") {
    Rng rng(2);
    const auto d = sample_temperature_world(10000, 2.0, ScoreLaw::beta(0.1), rng);
    const auto f = fit_temperature(d);
    CHECK_FALSE(f.degenerate);
    CHECK(f.t_hat >= 1.8);
    CHECK(f.t_hat <= 2.2);
}

TEST_CASE("the MLE is a local optimum and the likelihood is unimodal") {
    Rng rng(3);
    const auto d = sample_temperature_world(5000, 1.3, ScoreLaw::uniform(), rng);
    const auto f = fit_temperature(d);
    CHECK(f.unimodal_checked);
    CHECK(f.unimodal);
    CHECK(f.neg_log_lik <= f.neg_log_lik_at_1);
    for (double h : {1e-3, 1e-2, 0.1}) {
        CHECK(f.neg_log_lik <= temperature_nll(d.confidence(), d.correct(), f.t_hat * (1 + h)) + 1e-12);
        CHECK(f.neg_log_lik <= temperature_nll(d.confidence(), d.correct(), f.t_hat * (1 - h)) + 1e-12);
    }
}

TEST_CASE("fit is invariant to record order") {
    Rng rng(4);
    const auto d = sample_temperature_world(3000, 1.5, ScoreLaw::beta(0.2), rng);
    std::vector<double> c(d.confidence().begin(), d.confidence().end());
    std::vector<std::uint8_t> y(d.correct().begin(), d.correct().end());
    std::reverse(c.begin(), c.end());
    std::reverse(y.begin(), y.end());
    CHECK(fit_temperature(c, y).t_hat == doctest::Approx(fit_temperature(d).t_hat).epsilon(1e-8));
}

TEST_CASE("boundary records are excluded and counted") {
    const std::vector<double> c{0.0, 1.0, 0.7, 0.8, 0.9, 0.6};
    const std::vector<std::uint8_t> y{0, 1, 1, 0, 1, 1};
    const auto f = fit_temperature(c, y);
    CHECK(f.used == 4);
    CHECK(f.excluded_boundary == 2);
    const std::vector<double> b{0.0, 1.0};
    const std::vector<std::uint8_t> by{0, 1};
    CHECK_THROWS_AS(fit_temperature(b, by), AllBoundary);
}

TEST_CASE("flat or separable likelihoods are reported as degenerate") {
    const std::vector<double> c(50, 0.8);
    const std::vector<std::uint8_t> ones(50, 1), zeros(50, 0);
    const auto a = fit_temperature(c, ones);
    CHECK(a.degenerate);
    CHECK_FALSE(a.degenerate_reason.empty());
    CHECK(fit_temperature(c, zeros).degenerate);
    const std::vector<double> half(20, 0.5);
    CHECK(fit_temperature(half, std::vector<std::uint8_t>(20, 1)).degenerate);
}

TEST_CASE("Fisher information") {
    CHECK(fisher_info_approx(0.05) == doctest::Approx(0.4486).epsilon(1e-4 / 0.4486));
    CHECK_THROWS_AS(fisher_info_approx(0.0), InvalidParam);
    // Rare-error approximation is within 5% of the point-mass value at small eps.
    const double eps = 0.01;
    const std::vector<double> pm(100, 1 - eps);
    CHECK(std::abs(fisher_info(pm) / fisher_info_approx(eps) - 1) < 0.05);
    // Closed form for uniform confidences against midpoint quadrature.
    const int n = 2'000'000;
    double q = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = (i + 0.5) / n;
        const double z = std::log(p / (1 - p));
        q += p * (1 - p) * z * z;
    }
    CHECK(std::abs(fisher_info_uniform() - q / n) < 1e-4);
}

TEST_CASE("efficiency ratio formula") {
    CHECK(temperature_efficiency_ratio(1e4, 0.05) == doctest::Approx(0.01 / std::cbrt(0.05 / 1e4)));
    CHECK(temperature_efficiency_ratio(1e4, 0.05) == doctest::Approx(0.585).epsilon(0.001));
}

TEST_CASE("parametric rate, independent of the true temperature") {
    RateStudyConfig cfg;
    cfg.replicates = 100;
    cfg.seed = 5;
    const auto a = parametric_rate_study(cfg);
    CHECK(a.fit.slope >= -0.60);
    CHECK(a.fit.slope <= -0.40);
    cfg.t_star = 1.5;
    const auto b = parametric_rate_study(cfg);
    CHECK(std::abs(a.fit.slope - b.fit.slope) <= 2 * std::hypot(a.fit.slope_stderr, b.fit.slope_stderr));
    cfg.m_grid = {1000, 2000};
    CHECK_THROWS_AS(parametric_rate_study(cfg), InvalidParam);
}
