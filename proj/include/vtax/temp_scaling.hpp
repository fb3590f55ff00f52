#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vtax/core_types.hpp"
#include "vtax/regression.hpp"
#include "vtax/synth.hpp"

namespace vtax {

struct TempFit {
    double t_hat = 1.0;
    double neg_log_lik = 0.0;
    double neg_log_lik_at_1 = 0.0;
    double fisher_info_at_1 = 0.0;
    double kappa = 0.0;  // mean p(1-p)|logit p|, diagnostic only
    int iterations = 0;
    std::size_t used = 0;
    std::size_t excluded_boundary = 0;
    bool degenerate = false;
    std::string degenerate_reason;
    bool unimodal_checked = false;
    bool unimodal = true;
};

struct TempFitOptions {
    double t_lo = 0.05;
    double t_hi = 20.0;
    double rel_tol = 1e-8;
    bool check_unimodal = true;
};

// Maximum-likelihood temperature for sigmoid(logit(p)/T). Records with
// confidence exactly 0 or 1 are excluded and counted.
TempFit fit_temperature(const Dataset& data, const TempFitOptions& opt = {});
TempFit fit_temperature(std::span<const double> conf, std::span<const std::uint8_t> correct,
                        const TempFitOptions& opt = {});

double temperature_nll(std::span<const double> conf, std::span<const std::uint8_t> correct, double T);

// Empirical E[p(1-p) logit(p)^2] over interior records.
double fisher_info(const Dataset& data);
double fisher_info(std::span<const double> conf);
// Rare-error approximation eps * ln(1/eps)^2.
double fisher_info_approx(double eps);
// Integral of p(1-p) logit(p)^2 over p ~ Uniform(0,1), closed form.
double fisher_info_uniform();

// Labels drawn from sigmoid(logit(p)/T_star); confidences from `law`.
Dataset sample_temperature_world(std::size_t m, double t_star, const ScoreLaw& law, Rng& rng);

// (1/sqrt m) / (L eps / m)^{1/3}.
double temperature_efficiency_ratio(double m, double L_eps);

struct RatePoint {
    double m = 0.0;
    double mean_abs_error = 0.0;
    double se = 0.0;
};

struct RateStudy {
    std::vector<RatePoint> points;
    LinearFit fit;
};

struct RateStudyConfig {
    std::vector<double> m_grid{1000, 3162, 10000, 31623, 100000};
    int replicates = 200;
    double t_star = 1.0;
    ScoreLaw law = ScoreLaw::beta(0.1);
    std::uint64_t seed = 0;
};

RateStudy parametric_rate_study(const RateStudyConfig& cfg);

}  // namespace vtax
