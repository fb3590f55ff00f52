#include "vtax/sequential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/kernels.hpp"
#include "vtax/parallel.hpp"

namespace vtax {

namespace {

int bin_of(double p, int bins) {
    std::int32_t b = 0;
    kernels::scalar::assign_bins({&p, 1}, bins, {&b, 1});
    return b;
}

void reset_bins(SequentialState& s, int bins) {
    s.bins = bins;
    s.count.assign(static_cast<std::size_t>(bins), 0);
    s.hits.assign(static_cast<std::size_t>(bins), 0);
    s.conf_sum.assign(static_cast<std::size_t>(bins), 0.0);
    s.signed_gap.assign(static_cast<std::size_t>(bins), 0.0);
    s.abs_gap_total = 0.0;
}

void add_to_bins(SequentialState& s, double p, bool y) {
    const auto b = static_cast<std::size_t>(bin_of(p, s.bins));
    ++s.count[b];
    s.hits[b] += y ? 1 : 0;
    s.conf_sum[b] += p;
    const double old = std::abs(s.signed_gap[b]);
    s.signed_gap[b] += (y ? 1.0 : 0.0) - p;
    s.abs_gap_total += std::abs(s.signed_gap[b]) - old;
}

}  // namespace

SequentialState make_sequential_state(const SequentialConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidParam("alpha must be in (0,1)");
    if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw InvalidParam("delta must be in (0,1]");
    if (!(cfg.L > 0.0)) throw InvalidParam("L must be positive");
    if (cfg.pilot < 1) throw InvalidParam("pilot must be >= 1");
    SequentialState s;
    s.config = cfg;
    s.radius = std::numeric_limits<double>::infinity();
    reset_bins(s, 1);
    return s;
}

double confidence_radius(std::size_t t, double eps_hat, double alpha) {
    if (t == 0) return std::numeric_limits<double>::infinity();
    const double td = static_cast<double>(t);
    const double e2 = std::numbers::e * std::numbers::e;
    const double ell = std::log(std::log(std::max(td, e2))) + std::log(2.0 / alpha);
    // Bernstein range term for increments bounded by 1; keeps the boundary
    // honest while eps-hat is still small and noisy.
    return std::sqrt(2.0 * eps_hat * ell / td) + ell / (3.0 * td);
}

double smoothed_error_rate(std::size_t errors, std::size_t t) {
    return (static_cast<double>(errors) + 1.0) / (static_cast<double>(t) + 2.0);
}

void update_in_place(SequentialState& s, double p, bool y) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParam("confidence out of range");
    ++s.t;
    s.errors += y ? 0 : 1;
    add_to_bins(s, p, y);

    if (!s.bins_frozen) {
        s.pilot_conf.push_back(p);
        s.pilot_correct.push_back(y ? 1 : 0);
        if (s.t >= s.config.pilot) {
            // Freeze: bin count from the pilot error rate, pilot records rebinned.
            const double eps = smoothed_error_rate(s.errors, s.t);
            const int bins = optimal_bin_count(s.config.L, static_cast<double>(s.t), eps);
            reset_bins(s, bins);
            for (std::size_t i = 0; i < s.pilot_conf.size(); ++i)
                add_to_bins(s, s.pilot_conf[i], s.pilot_correct[i] != 0);
            s.bins_frozen = true;
            s.pilot_conf = {};
            s.pilot_correct = {};
        }
    }

    s.ece = std::max(0.0, s.abs_gap_total) / static_cast<double>(s.t);
    s.eps_hat = smoothed_error_rate(s.errors, s.t);
    s.radius = confidence_radius(s.t, s.eps_hat, s.config.alpha);
    // The boundary is only declared once the bins are frozen.
    if (!s.stopped && s.bins_frozen && s.radius <= s.config.delta) {
        s.stopped = true;
        s.stop_time = s.t;
    }
}

SequentialState update(SequentialState state, const PredictionRecord& record) {
    update_in_place(state, record.confidence, record.correct);
    return state;
}

double wald_lower_bound(double eps, double delta, double alpha) {
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidParam("eps must be in (0,1]");
    if (!(delta > 0.0 && delta <= 1.0)) throw InvalidParam("delta must be in (0,1]");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParam("alpha must be in (0,1]");
    return eps * std::log(1.0 / alpha) / (delta * delta);
}

SequentialRunSummary run_sequential_stream(const SyntheticWorld& world, std::size_t length,
                                           const SequentialConfig& cfg, std::uint64_t stream,
                                           double truth, bool stop_early) {
    world.validate();
    Rng rng(world.seed, {stream});
    auto state = make_sequential_state(cfg);
    SequentialRunSummary out;
    bool shrunk = false;
    for (std::size_t i = 0; i < length; ++i) {
        const double p = world.score_law.sample(rng);
        const bool y = rng.uniform() < world.accuracy_at(p);
        update_in_place(state, p, y);
        if (std::abs(state.ece - truth) > state.radius) out.violated = true;
        if (!shrunk) {
            if (state.radius <= cfg.delta) shrunk = true;
            else if (state.ece - state.radius > 0.0) out.excluded_zero_first = true;
        }
        if (stop_early && state.stopped) break;
    }
    out.stop_time = state.stop_time;
    return out;
}

SequentialStudy sequential_study(const SyntheticWorld& world, std::size_t runs, std::size_t length,
                                 const SequentialConfig& cfg, bool stop_early) {
    if (runs == 0 || length == 0) throw InvalidParam("runs and length must be positive");
    const double truth = true_ece(world);
    std::vector<SequentialRunSummary> res(runs);
    parallel_for(runs, [&](std::size_t r) { res[r] = run_sequential_stream(world, length, cfg, r, truth, stop_early); });

    SequentialStudy st;
    st.runs = runs;
    st.wald_bound = wald_lower_bound(world.error_rate, cfg.delta, cfg.alpha);
    std::size_t violated = 0, excluded = 0, stopped = 0;
    double stop_sum = 0.0;
    st.min_stop_time = std::numeric_limits<std::size_t>::max();
    for (const auto& r : res) {
        violated += r.violated;
        excluded += r.excluded_zero_first;
        if (r.stop_time) {
            ++stopped;
            stop_sum += static_cast<double>(*r.stop_time);
            st.min_stop_time = std::min(st.min_stop_time, *r.stop_time);
        }
    }
    st.violation_fraction = static_cast<double>(violated) / runs;
    st.exclusion_fraction = static_cast<double>(excluded) / runs;
    st.never_stopped_fraction = static_cast<double>(runs - stopped) / runs;
    st.mean_stop_time = stopped ? stop_sum / stopped : 0.0;
    if (!stopped) st.min_stop_time = 0;
    return st;
}

}  // namespace vtax
