#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vtax/regression.hpp"
#include "vtax/synth.hpp"

namespace vtax {

// Auditor's query interface: ask for one labelled outcome at confidence level
// p and get back whether the model was correct. Adapters for real systems
// implement this; the synthetic oracle draws Bernoulli(eta(p)).
using QueryOracle = std::function<bool(double p)>;

struct ActivePlan {
    int grid_size = 1;
    double window_center = 0.85;
    double window_width = 1.0;
    long per_level_budget_phase1 = 1;
    long phase2_budget = 0;
    double sigma_multiplier = 2.0;
};

struct ActiveOverrides {
    std::optional<int> grid_size;
    std::optional<double> window_width;
    std::optional<double> sigma_multiplier;
    std::optional<double> phase1_fraction;  // default 0.5
};

struct LevelResult {
    double level = 0.0;
    double lo = 0.0, hi = 0.0;  // cell edges
    double mass = 0.0;          // score-law probability assigned to the cell
    double sigma = 0.0;         // Phase-1 standard error under the null
    double delta_phase1 = 0.0;
    bool resolved = false;
    int sign = 0;
    long phase2_calls = 0;
    double delta_phase2 = 0.0;
};

struct ActiveResult {
    double ece_estimate = 0.0;
    std::vector<int> resolved_bins;
    std::vector<int> unresolved_bins;
    bool no_signal = false;
    double correction = 0.0;  // unresolved-run contribution
    long calls_used = 0;
    ActivePlan plan;
    std::vector<LevelResult> levels;
};

ActivePlan make_active_plan(long m, double L, double eps, const ActiveOverrides& o = {});

// Two-phase estimator. `law` is the deployment confidence distribution the
// ECE is taken over; it weights each level by its cell mass.
ActiveResult active_estimate(const QueryOracle& oracle, long m, double L, double eps, const ScoreLaw& law,
                             const ActiveOverrides& o = {});

// Bernoulli(world.accuracy_at(p)) oracle drawing from `rng`.
QueryOracle world_oracle(const SyntheticWorld& world, Rng& rng);

struct ActivePassivePoint {
    double L = 0.0;
    long m = 0;
    double active_error = 0.0, active_se = 0.0;
    double passive_error = 0.0, passive_se = 0.0;
    double no_signal_fraction = 0.0;
};

struct ActivePassiveFit {
    double L = 0.0;
    LinearFit active, passive;
    double ratio = 0.0;  // |active slope| / |passive slope|
};

struct ActivePassiveStudy {
    std::vector<ActivePassivePoint> points;
    std::vector<ActivePassiveFit> fits;
};

struct ActiveStudyConfig {
    std::vector<double> L_grid{1.4, 2.0, 2.5};
    std::vector<long> m_grid{1000, 3162, 10000, 31623, 100000};
    int replicates = 100;
    int frequency = 8;
    double eps = 0.16;
    std::uint64_t seed = 0;
    ActiveOverrides overrides;
};

// Sinusoid worlds with k = frequency and A = L / (2 pi k).
ActivePassiveStudy active_vs_passive_study(const ActiveStudyConfig& cfg);

// Errors at one (world, m) for `replicates` replicates; building block of the study.
ActivePassivePoint active_passive_point(const SyntheticWorld& world, long m, int replicates, std::uint64_t seed,
                                        const ActiveOverrides& o = {});

}  // namespace vtax
