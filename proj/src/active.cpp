#include "vtax/active.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/parallel.hpp"

namespace vtax {

ActivePlan make_active_plan(long m, double L, double eps, const ActiveOverrides& o) {
    if (!(L > 0.0)) throw InvalidParam("L must be positive");
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidParam("eps must be in (0,1]");
    if (m < 1) throw InvalidParam("m must be >= 1");
    const double frac = o.phase1_fraction.value_or(0.5);
    if (!(frac > 0.0 && frac < 1.0)) throw InvalidParam("phase-1 fraction must be in (0,1)");

    ActivePlan p;
    p.grid_size = o.grid_size.value_or(
        std::max(1, static_cast<int>(std::lround(L * std::sqrt(static_cast<double>(m) / eps)))));
    if (p.grid_size < 1) throw InvalidParam("grid size must be >= 1");
    p.window_center = 1.0 - eps;
    p.window_width = o.window_width.value_or(std::min(1.0, 8.0 * eps));
    if (!(p.window_width > 0.0 && p.window_width <= 1.0)) throw InvalidParam("window width must be in (0,1]");
    p.sigma_multiplier = o.sigma_multiplier.value_or(2.0);
    if (!(p.sigma_multiplier > 0.0)) throw InvalidParam("sigma multiplier must be positive");
    if (m < 4L * p.grid_size)
        throw BudgetTooSmall("budget " + std::to_string(m) + " is below 4N = " + std::to_string(4L * p.grid_size));
    p.per_level_budget_phase1 = static_cast<long>(std::floor(frac * static_cast<double>(m) / p.grid_size));
    p.phase2_budget = m - p.per_level_budget_phase1 * p.grid_size;
    return p;
}

ActiveResult active_estimate(const QueryOracle& oracle, long m, double L, double eps, const ScoreLaw& law,
                             const ActiveOverrides& o) {
    if (!oracle) throw InvalidParam("oracle is empty");
    law.validate();
    ActiveResult res;
    res.plan = make_active_plan(m, L, eps, o);
    const ActivePlan& plan = res.plan;
    const int N = plan.grid_size;

    auto query = [&](double p) {
        ++res.calls_used;
        try {
            return oracle(p);
        } catch (const std::exception& e) {
            throw OracleFailure(std::string("oracle failed at p=") + std::to_string(p) + ": " + e.what());
        }
    };

    double lo = std::max(0.0, plan.window_center - plan.window_width / 2.0);
    double hi = std::min(1.0, plan.window_center + plan.window_width / 2.0);
    const double h = (hi - lo) / N;
    res.levels.resize(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        LevelResult& lv = res.levels[static_cast<std::size_t>(j)];
        lv.lo = lo + h * j;
        lv.hi = j + 1 == N ? hi : lo + h * (j + 1);
        lv.level = 0.5 * (lv.lo + lv.hi);
        // Mass outside the window is folded into the end cells.
        const double a = j == 0 ? 0.0 : law.cdf(lv.lo);
        const double b = j + 1 == N ? 1.0 : law.cdf(lv.hi);
        lv.mass = std::max(0.0, b - a);
    }

    // Phase 1: uniform exploration, 2-sigma sign resolution.
    const long n1 = plan.per_level_budget_phase1;
    for (int j = 0; j < N; ++j) {
        LevelResult& lv = res.levels[static_cast<std::size_t>(j)];
        long hits = 0;
        for (long q = 0; q < n1; ++q) hits += query(lv.level) ? 1 : 0;
        lv.delta_phase1 = static_cast<double>(hits) / static_cast<double>(n1) - lv.level;
        lv.sigma = std::sqrt(lv.level * (1.0 - lv.level) / static_cast<double>(n1));
        lv.resolved = std::abs(lv.delta_phase1) > plan.sigma_multiplier * lv.sigma;
        lv.sign = lv.delta_phase1 > 0.0 ? 1 : (lv.delta_phase1 < 0.0 ? -1 : 0);
        (lv.resolved ? res.resolved_bins : res.unresolved_bins).push_back(j);
    }

    // Unresolved runs: midpoint bound sigma^2 / L per unit mass.
    for (int j = 0; j < N;) {
        if (res.levels[static_cast<std::size_t>(j)].resolved) {
            ++j;
            continue;
        }
        double mass = 0.0, var = 0.0;
        int len = 0;
        for (; j < N && !res.levels[static_cast<std::size_t>(j)].resolved; ++j, ++len) {
            mass += res.levels[static_cast<std::size_t>(j)].mass;
            var += res.levels[static_cast<std::size_t>(j)].sigma * res.levels[static_cast<std::size_t>(j)].sigma;
        }
        res.correction += mass * (var / len) / L;
    }

    if (res.resolved_bins.empty()) {
        res.no_signal = true;
        res.ece_estimate = res.correction;
        return res;
    }

    // Phase 2: fresh queries on resolved levels only, sign fixed by Phase 1.
    const long n2 = (m - res.calls_used) / static_cast<long>(res.resolved_bins.size());
    double total = res.correction;
    for (int j : res.resolved_bins) {
        LevelResult& lv = res.levels[static_cast<std::size_t>(j)];
        if (n2 < 1) {
            total += lv.mass * std::abs(lv.delta_phase1);
            continue;
        }
        long hits = 0;
        for (long q = 0; q < n2; ++q) hits += query(lv.level) ? 1 : 0;
        lv.phase2_calls = n2;
        lv.delta_phase2 = static_cast<double>(hits) / static_cast<double>(n2) - lv.level;
        total += lv.mass * std::max(0.0, lv.sign * lv.delta_phase2);
    }
    res.ece_estimate = std::min(1.0, total);
    return res;
}

QueryOracle world_oracle(const SyntheticWorld& world, Rng& rng) {
    world.validate();
    return [&world, &rng](double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidParam("query level outside [0,1]");
        return rng.uniform() < world.accuracy_at(p);
    };
}

ActivePassivePoint active_passive_point(const SyntheticWorld& world, long m, int replicates, std::uint64_t seed,
                                        const ActiveOverrides& o) {
    if (replicates < 2) throw InvalidParam("need at least two replicates");
    const double truth = true_ece(world);
    const double L = std::max(world.lipschitz(), 1e-9);
    const double eps = world.error_rate;
    const int bins = world.lipschitz() > 0.0 ? optimal_bin_count(L, static_cast<double>(m), eps) : 1;

    std::vector<double> act(static_cast<std::size_t>(replicates)), pas(act.size()), nosig(act.size());
    parallel_for(act.size(), [&](std::size_t r) {
        Rng prng(seed, {static_cast<std::uint64_t>(m), r, 0});
        std::vector<double> conf;
        std::vector<std::uint8_t> y;
        sample_world_columns(world, static_cast<std::size_t>(m), prng, conf, y);
        pas[r] = std::abs(ece_value(conf, y, bins) - truth);

        Rng arng(seed, {static_cast<std::uint64_t>(m), r, 1});
        const auto res = active_estimate(world_oracle(world, arng), m, L, eps, world.score_law, o);
        act[r] = std::abs(res.ece_estimate - truth);
        nosig[r] = res.no_signal ? 1.0 : 0.0;
    });

    ActivePassivePoint pt;
    pt.L = world.lipschitz();
    pt.m = m;
    const double rs = std::sqrt(static_cast<double>(replicates));
    pt.active_error = mean(act);
    pt.active_se = stddev(act) / rs;
    pt.passive_error = mean(pas);
    pt.passive_se = stddev(pas) / rs;
    pt.no_signal_fraction = mean(nosig);
    return pt;
}

ActivePassiveStudy active_vs_passive_study(const ActiveStudyConfig& cfg) {
    if (cfg.L_grid.empty() || cfg.m_grid.size() < 2) throw InvalidParam("need L values and at least two m values");
    const auto [mn, mx] = std::minmax_element(cfg.m_grid.begin(), cfg.m_grid.end());
    if (std::log10(static_cast<double>(*mx) / static_cast<double>(*mn)) < 1.5 - 1e-9)
        throw InvalidParam("m grid must span at least 1.5 decades");

    ActivePassiveStudy study;
    for (std::size_t li = 0; li < cfg.L_grid.size(); ++li) {
        const double L = cfg.L_grid[li];
        const auto world = sinusoid_world(L / (2.0 * std::numbers::pi * cfg.frequency), cfg.frequency, cfg.eps,
                                          stream_key(cfg.seed, {li}));
        std::vector<double> ms, ae, pe;
        for (long m : cfg.m_grid) {
            auto pt = active_passive_point(world, m, cfg.replicates, stream_key(cfg.seed, {li, 7}), cfg.overrides);
            pt.L = L;
            study.points.push_back(pt);
            ms.push_back(static_cast<double>(m));
            ae.push_back(pt.active_error);
            pe.push_back(pt.passive_error);
        }
        ActivePassiveFit fit;
        fit.L = L;
        fit.active = loglog_fit(ms, ae);
        fit.passive = loglog_fit(ms, pe);
        fit.ratio = std::abs(fit.passive.slope) > 0.0 ? std::abs(fit.active.slope) / std::abs(fit.passive.slope) : 0.0;
        study.fits.push_back(fit);
    }
    return study;
}

}  // namespace vtax
