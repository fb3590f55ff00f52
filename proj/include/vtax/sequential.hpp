#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vtax/core_types.hpp"
#include "vtax/synth.hpp"

namespace vtax {

struct SequentialConfig {
    double alpha = 0.05;
    double delta = 0.02;
    double L = 1.0;
    std::size_t pilot = 100;  // bins frozen after this many records
};

struct SequentialState {
    SequentialConfig config;
    std::size_t t = 0;
    std::size_t errors = 0;
    int bins = 1;
    bool bins_frozen = false;
    std::vector<std::size_t> count;
    std::vector<std::size_t> hits;
    std::vector<double> conf_sum;
    double ece = 0.0;
    double radius = 0.0;  // +inf until the first record
    double eps_hat = 0.0;
    bool stopped = false;
    std::optional<std::size_t> stop_time;

    // Pilot records, kept only until the bins are frozen.
    std::vector<double> pilot_conf;
    std::vector<std::uint8_t> pilot_correct;
    // Per-bin sum of (correct - confidence) and the running sum of |.|.
    std::vector<double> signed_gap;
    double abs_gap_total = 0.0;
};

SequentialState make_sequential_state(const SequentialConfig& cfg);

// With l = ln ln max(t, e^2) + ln(2/alpha): sqrt(2 eps l / t) + l / (3t).
// +inf at t = 0.
double confidence_radius(std::size_t t, double eps_hat, double alpha);

// Running error rate with add-one smoothing, (errors + 1)/(t + 2).
double smoothed_error_rate(std::size_t errors, std::size_t t);

void update_in_place(SequentialState& state, double confidence, bool correct);
SequentialState update(SequentialState state, const PredictionRecord& record);

// eps ln(1/alpha) / delta^2.
double wald_lower_bound(double eps, double delta, double alpha);

struct SequentialRunSummary {
    std::optional<std::size_t> stop_time;
    bool violated = false;           // |ECE_t - ECE| > C_t for some t
    bool excluded_zero_first = false;  // ECE_t - C_t > 0 before C_t <= delta
};

// Feeds `length` records of `world` through a fresh monitor.
SequentialRunSummary run_sequential_stream(const SyntheticWorld& world, std::size_t length,
                                           const SequentialConfig& cfg, std::uint64_t stream,
                                           double true_ece_value, bool stop_early = false);

struct SequentialStudy {
    std::size_t runs = 0;
    double violation_fraction = 0.0;
    double mean_stop_time = 0.0;
    std::size_t min_stop_time = 0;
    double never_stopped_fraction = 0.0;
    double exclusion_fraction = 0.0;
    double wald_bound = 0.0;
};

SequentialStudy sequential_study(const SyntheticWorld& world, std::size_t runs, std::size_t length,
                                 const SequentialConfig& cfg, bool stop_early = false);

}  // namespace vtax
