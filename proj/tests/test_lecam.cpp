#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "vtax/error.hpp"
#include "vtax/lecam.hpp"
#include "vtax/parallel.hpp"

using namespace vtax;

namespace {

double binom_pmf(int m, int k, double q) {
    return std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) + k * std::log(q) +
                    (m - k) * std::log1p(-q));
}

// Power of the exact randomised level-alpha test that rejects for large
// error counts, computed from the two binomial pmfs.
double exact_power_oracle(int m, double eps0, double eps1, double alpha) {
    std::vector<double> p0(m + 1), p1(m + 1);
    for (int k = 0; k <= m; ++k) {
        p0[k] = binom_pmf(m, k, eps0);
        p1[k] = binom_pmf(m, k, eps1);
    }
    double tail = 0.0, power = 0.0;
    for (int k = m; k >= 0; --k) {
        if (tail + p0[k] <= alpha) {
            tail += p0[k];
            power += p1[k];
            continue;
        }
        power += p1[k] * (alpha - tail) / p0[k];
        break;
    }
    return power;
}

const std::vector<double> kTableEps{0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35};
const std::vector<double> kTableC1{0.3780, 0.3638, 0.3474, 0.3326, 0.3206, 0.3093, 0.2982, 0.2873, 0.2759};

}  // namespace

TEST_CASE("Bernoulli KL") {
    CHECK(bernoulli_kl(0.3, 0.3) == 0.0);
    CHECK(bernoulli_kl(0.99, 0.98) == doctest::Approx(0.003119).epsilon(1e-5 / 0.003119));
    for (double p : {0.05, 0.4, 0.9})
        for (double q : {0.1, 0.5, 0.97}) {
            CHECK(bernoulli_kl(p, q) >= 0.0);
            CHECK(bernoulli_kl(q, p) >= 0.0);
        }
    CHECK(bernoulli_kl(0.1, 0.6) != doctest::Approx(bernoulli_kl(0.6, 0.1)));
    CHECK(std::isinf(bernoulli_kl(0.5, 0.0)));
    CHECK(std::isinf(bernoulli_kl(0.5, 1.0)));
    CHECK_THROWS_AS(bernoulli_kl(1.5, 0.5), InvalidParam);
}

TEST_CASE("quadratic-KL control reproduces the analytic maximum") {
    // max_u (u/2) exp(-u^2) at u = 1/sqrt(2).
    const double analytic = 0.5 / std::sqrt(2.0) * std::exp(-0.5);
    CHECK(analytic == doctest::Approx(0.2144).epsilon(1e-3));
    for (double eps : {0.01, 0.1, 0.3}) {
        const auto c = lecam_constant(eps, LeCamBound::QuadraticBH);
        CHECK(std::abs(c.c1 - analytic) < 1e-6);
    }
}

TEST_CASE("exact-LRT constants match the sharp-constant table") {
    double prev = 1.0;
    for (std::size_t i = 0; i < kTableEps.size(); ++i) {
        const auto c = lecam_constant(kTableEps[i], LeCamBound::ExactLRT);
        CAPTURE(kTableEps[i]);
        CHECK(std::abs(c.c1 - kTableC1[i]) < 5e-4);
        CHECK(c.c1 >= 0.184);
        CHECK(c.c1 < prev);
        CHECK(std::round(c.c1 * 100) / 100 >= 0.28);
        CHECK(std::round(c.c1 * 100) / 100 <= 0.38);
        prev = c.c1;
    }
}

TEST_CASE("bound ordering: exact >= Bretagnolle-Huber >= Pinsker at each eps") {
    for (double eps : kTableEps) {
        const double ex = lecam_constant(eps, LeCamBound::ExactLRT).c1;
        const double bh = lecam_constant(eps, LeCamBound::BretagnolleHuber).c1;
        const double pi = lecam_constant(eps, LeCamBound::Pinsker).c1;
        CHECK(ex >= bh);
        CHECK(bh >= pi);
        CHECK(pi >= 0.184);
    }
}

TEST_CASE("constants are nearly m_ref independent away from tiny m*eps") {
    for (double eps : {0.15, 0.2, 0.25, 0.3, 0.35}) {
        const double a = lecam_constant(eps, LeCamBound::ExactLRT, 500).c1;
        const double b = lecam_constant(eps, LeCamBound::ExactLRT, 2000).c1;
        CAPTURE(eps);
        CHECK(std::abs(a - b) / b < 0.02);
    }
}

TEST_CASE("lecam_constant input checks") {
    CHECK_THROWS_AS(lecam_constant(0.0, LeCamBound::ExactLRT), InvalidParam);
    CHECK_THROWS_AS(lecam_constant(0.5, LeCamBound::ExactLRT), InvalidParam);
    CHECK_THROWS_AS(lecam_constant(0.1, LeCamBound::ExactLRT, 0), InvalidParam);
    CHECK(parse_bound("bh") == LeCamBound::BretagnolleHuber);
    CHECK(parse_bound(bound_name(LeCamBound::Pinsker)) == LeCamBound::Pinsker);
    CHECK_THROWS_AS(parse_bound("chernoff"), InvalidParam);
}

TEST_CASE("exact detection power matches the binomial oracle") {
    for (double eps : {0.01, 0.05, 0.15, 0.3})
        for (double me : {0.1, 1.0, 3.0, 10.0}) {
            const long m = std::max(1L, std::lround(me / eps));
            const TwoPointHypotheses h{1 - eps, eps, m};
            CHECK(exact_detection_power(h, 0.05) ==
                  doctest::Approx(exact_power_oracle(static_cast<int>(m), eps, 2 * eps, 0.05)).epsilon(1e-9));
        }
}

TEST_CASE("Monte-Carlo detection power") {
    const double eps = 0.05;
    SUBCASE("null hypothesis gives power near alpha") {
        const int trials = 4000;
        const double p = detection_power({1 - eps, 0.0, 200}, 0.05, trials, 1);
        CHECK(std::abs(p - 0.05) <= 3 * std::sqrt(0.05 * 0.95 / trials));
    }
    SUBCASE("small and large m*eps") {
        CHECK(detection_power({1 - eps, eps, 2}, 0.05, 2000, 2) <= 0.2);
        CHECK(detection_power({1 - eps, eps, 200}, 0.05, 2000, 3) >= 0.8);
    }
    SUBCASE("agrees with the exact power within 4 standard errors") {
        for (long m : {20L, 60L, 100L}) {
            const TwoPointHypotheses h{1 - eps, eps, m};
            const double ex = exact_detection_power(h, 0.05);
            const double mc = detection_power(h, 0.05, 4000, 4);
            CHECK(std::abs(mc - ex) <= 4 * std::sqrt(ex * (1 - ex) / 4000) + 0.01);
        }
    }
    SUBCASE("monotone in m and in delta within two standard errors") {
        const int trials = 2000;
        const double se = 2 * std::sqrt(0.25 / trials);
        double prev = 0.0;
        for (long m : {5L, 20L, 50L, 100L, 200L}) {
            const double p = detection_power({1 - eps, eps, m}, 0.05, trials, 5);
            CHECK(p >= prev - se);
            prev = p;
        }
        prev = 0.0;
        for (double d : {0.0, 0.01, 0.03, 0.05, 0.08}) {
            const double p = detection_power({1 - eps, d, 100}, 0.05, trials, 6);
            CHECK(p >= prev - se);
            prev = p;
        }
    }
    SUBCASE("deterministic and thread-count invariant") {
        const TwoPointHypotheses h{1 - eps, eps, 80};
        const double a = detection_power(h, 0.05, 1000, 9);
        set_max_threads(1);
        const double b = detection_power(h, 0.05, 1000, 9);
        set_max_threads(0);
        CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    }
    CHECK_THROWS_AS(detection_power({1 - eps, eps, 10}, 0.05, 50, 1), InvalidParam);
}

TEST_CASE("self-verification harness: identical observations, identical outputs") {
    for (const auto& est : default_label_free_estimators()) {
        CAPTURE(est.name);
        HarnessConfig cfg;
        cfg.ece1 = 1.0;
        const auto r = self_verification_harness(cfg, est.fn);
        CHECK(r.streams_identical);
        CHECK(r.identical);
        CHECK(r.floor == 0.5);
        for (double d : {0.1, 0.3}) {
            cfg.ece1 = d;
            const auto q = self_verification_harness(cfg, est.fn);
            CHECK(q.identical);
            CHECK(q.floor == doctest::Approx(d / 2));
            // The worlds really differ in their labels.
            CHECK(q.label_ece1 > q.label_ece0);
        }
    }
}

TEST_CASE("pseudo-label estimator reports zero in both worlds") {
    HarnessConfig cfg;
    cfg.ece1 = 0.3;
    const auto r = self_verification_harness(cfg, pseudo_label_ece_estimator);
    CHECK(r.out0 == 0.0);
    CHECK(r.out1 == 0.0);
}

TEST_CASE("label-free stream is deterministic in the seed") {
    HarnessConfig cfg;
    cfg.seed = 5;
    const auto a = label_free_stream(cfg);
    const auto b = label_free_stream(cfg);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof a[0]) == 0);
    cfg.seed = 6;
    CHECK(label_free_stream(cfg)[0].confidence != a[0].confidence);
}
