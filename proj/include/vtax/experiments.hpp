#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "vtax/active.hpp"
#include "vtax/core_types.hpp"
#include "vtax/regression.hpp"
#include "vtax/synth.hpp"

namespace vtax {

// Phase transition ------------------------------------------------------------

struct PhaseConfig {
    std::vector<double> eps_grid{0.01, 0.05, 0.15, 0.3};
    std::vector<double> m_eps_grid{0.1, 1.0, 10.0};
    int trials = 2000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

struct PhasePoint {
    double eps = 0.0;
    double m_eps = 0.0;  // requested coordinate; m = max(1, round(m_eps / eps))
    long m = 1;
    double power = 0.0;
    double power_se = 0.0;
    double exact_power = 0.0;
};

// Delta = eps at every point.
std::vector<PhasePoint> phase_transition_experiment(const PhaseConfig& cfg);

// Max minus min power across eps at one m*eps coordinate.
double phase_spread(const std::vector<PhasePoint>& points, double m_eps);

// m*eps where the power curve for `eps` first reaches `level`, by linear
// interpolation in log(m*eps); empty if it never does.
std::optional<double> power_crossing(const std::vector<PhasePoint>& points, double eps, double level = 0.5);

// Passive slope study ---------------------------------------------------------

struct SlopeConfig {
    std::vector<int> k_grid{0, 8};
    std::vector<long> m_grid{1000, 3162, 10000, 31623, 100000};
    int replicates = 100;
    double amplitude = 0.05;
    double eps = 0.15;
    std::uint64_t seed = 0;
};

struct SlopePoint {
    int k = 0;
    long m = 0;
    int bins = 1;
    double mean_error = 0.0;
    double error_se = 0.0;
    double true_ece = 0.0;
    double clip_fraction = 0.0;
};

struct SlopeFit {
    int k = 0;
    LinearFit fit;
};

struct SlopeStudy {
    std::vector<SlopePoint> points;
    std::vector<SlopeFit> fits;
};

// k = 0 is the constant-gap world with gap -amplitude.
SyntheticWorld slope_world(int k, double amplitude, double eps, std::uint64_t seed);

// Mean and standard error of |ECE-hat - true ECE| over replicates, ECE-hat at
// B*(L, m, eps) (one bin when L = 0). Throws ExperimentAborted if more than 5%
// of the sampled Bernoulli means were clipped.
SlopePoint passive_error(const SyntheticWorld& world, double L, long m, int replicates, std::uint64_t seed,
                         double true_value);

SlopeStudy slope_study(const SlopeConfig& cfg);

// Pseudo-classifier control ---------------------------------------------------

struct PseudoConfig {
    int classes = 10;
    double eps_target = 0.10;
    std::size_t N = 20000;
    std::vector<std::size_t> m_grid{100, 200, 500, 1000, 2000, 5000, 10000, 20000};
    int replicates = 200;
    std::uint64_t seed = 0;
};

struct PseudoPoint {
    std::size_t m = 0;
    int bins = 1;
    double mean_ece = 0.0;
    double std_ece = 0.0;
    double floor = 0.0;
    double floor_over_std = 0.0;
};

struct PseudoControl {
    Dataset data;
    double margin = 0.0;  // logit boost on the true class
    double eps_hat = 0.0;
    double L_hat = 0.0;
    int full_bins = 1;
    double full_ece = 0.0;
    std::vector<PseudoPoint> points;
};

// Softmax classifier over Gaussian logits. The true-class margin is set to the
// quantile of the rival-minus-true logit deficit that makes the realised error
// rate floor(eps_target N)/N.
PseudoControl pseudo_classifier_control(const PseudoConfig& cfg);

// Compositional pipeline ------------------------------------------------------

struct CompositionConfig {
    double L = 2.0;
    std::vector<int> K_grid{1, 2, 3, 4, 5};
    double delta_target = 0.05;
    int replicates = 200;
    double eps = 0.15;
    long m_min = 10;
    long m_max = 1'000'000;
    std::uint64_t seed = 0;
};

struct CompositionPoint {
    int K = 0;
    double lipschitz_bound = 0.0;  // product of stage constants + 1
    double lipschitz_emp = 0.0;
    double true_ece = 0.0;
    long cost = 0;
    double error_at_cost = 0.0;
};

struct CompositionStudy {
    std::vector<CompositionPoint> points;
    LinearFit fit;     // ln(cost) on K
    double base = 0.0;  // exp(slope)
};

// Smallest m in [m_min, m_max] whose mean passive error reaches the target:
// scan a log grid (8 points per decade), then bisect between the last failing
// and first passing grid points. Throws BudgetExceeded if none does.
long passive_cost(const SyntheticWorld& world, double L, double target, long m_min, long m_max, int replicates,
                  std::uint64_t seed, double* error_at_cost = nullptr);

CompositionStudy compositional_experiment(const CompositionConfig& cfg);

// CSV emitters ----------------------------------------------------------------

void write_csv(std::ostream& out, const std::vector<PhasePoint>& points);
void write_csv(std::ostream& out, const SlopeStudy& study);
void write_csv(std::ostream& out, const PseudoControl& control);
void write_csv(std::ostream& out, const CompositionStudy& study);
void write_csv(std::ostream& out, const ActivePassiveStudy& study);

}  // namespace vtax
