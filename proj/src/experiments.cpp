#include "vtax/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "vtax/calculators.hpp"
#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/lecam.hpp"
#include "vtax/parallel.hpp"
#include "vtax/rng.hpp"

namespace vtax {

namespace {

constexpr double kMaxClipFraction = 0.05;

int bins_for(double L, double m, double eps) { return L > 0.0 ? optimal_bin_count(L, m, eps) : 1; }

void check_span(const std::vector<long>& m_grid) {
    if (m_grid.size() < 2) throw InvalidParam("need at least two m values");
    const auto [mn, mx] = std::minmax_element(m_grid.begin(), m_grid.end());
    if (*mn < 1) throw InvalidParam("m values must be >= 1");
    if (std::log10(static_cast<double>(*mx) / static_cast<double>(*mn)) < 1.5 - 1e-9)
        throw InvalidParam("m grid must span at least 1.5 decades");
}

}  // namespace

std::vector<PhasePoint> phase_transition_experiment(const PhaseConfig& cfg) {
    if (cfg.eps_grid.empty() || cfg.m_eps_grid.empty()) throw InvalidParam("grids must be non-empty");
    if (cfg.trials < 1) throw InvalidParam("trials must be >= 1");
    std::vector<PhasePoint> out;
    for (std::size_t ei = 0; ei < cfg.eps_grid.size(); ++ei) {
        const double eps = cfg.eps_grid[ei];
        if (!(eps > 0.0 && eps < 0.5)) throw InvalidParam("eps must be in (0, 0.5) so that p0 - eps stays positive");
        for (std::size_t gi = 0; gi < cfg.m_eps_grid.size(); ++gi) {
            const double me = cfg.m_eps_grid[gi];
            if (!(me > 0.0)) throw InvalidParam("m*eps must be positive");
            PhasePoint pt;
            pt.eps = eps;
            pt.m_eps = me;
            pt.m = std::max(1L, std::lround(me / eps));
            const TwoPointHypotheses hyp{1.0 - eps, eps, pt.m};
            pt.power = detection_power(hyp, cfg.alpha, cfg.trials, stream_key(cfg.seed, {ei, gi}));
            pt.power_se = std::sqrt(pt.power * (1.0 - pt.power) / cfg.trials);
            pt.exact_power = exact_detection_power(hyp, cfg.alpha);
            out.push_back(pt);
        }
    }
    return out;
}

double phase_spread(const std::vector<PhasePoint>& points, double m_eps) {
    double lo = 1.0, hi = 0.0;
    bool any = false;
    for (const auto& p : points) {
        if (std::abs(p.m_eps - m_eps) > 1e-12 * m_eps) continue;
        lo = std::min(lo, p.power);
        hi = std::max(hi, p.power);
        any = true;
    }
    if (!any) throw InvalidParam("no points at that m*eps");
    return hi - lo;
}

std::optional<double> power_crossing(const std::vector<PhasePoint>& points, double eps, double level) {
    std::vector<PhasePoint> curve;
    for (const auto& p : points)
        if (p.eps == eps) curve.push_back(p);
    std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.m_eps < b.m_eps; });
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].power < level) continue;
        if (i == 0) return curve[0].m_eps;
        const double x0 = std::log(curve[i - 1].m_eps), x1 = std::log(curve[i].m_eps);
        const double y0 = curve[i - 1].power, y1 = curve[i].power;
        return std::exp(x0 + (level - y0) / (y1 - y0) * (x1 - x0));
    }
    return std::nullopt;
}

SyntheticWorld slope_world(int k, double amplitude, double eps, std::uint64_t seed) {
    if (k < 0) throw InvalidParam("k must be >= 0");
    if (k > 0) return sinusoid_world(amplitude, k, eps, seed);
    SyntheticWorld w;
    w.amplitude = -amplitude;
    w.frequency = 1;
    w.error_rate = eps;
    w.gap_kind = GapKind::Constant;
    w.score_law = ScoreLaw::beta(eps);
    w.seed = seed;
    return w;
}

SlopePoint passive_error(const SyntheticWorld& world, double L, long m, int replicates, std::uint64_t seed,
                         double true_value) {
    if (replicates < 2) throw InvalidParam("need at least two replicates");
    if (m < 1) throw InvalidParam("m must be >= 1");
    const int bins = bins_for(L, static_cast<double>(m), world.error_rate);
    std::vector<double> err(static_cast<std::size_t>(replicates));
    std::vector<std::size_t> clipped(err.size());
    parallel_for(err.size(), [&](std::size_t r) {
        Rng rng(seed, {static_cast<std::uint64_t>(m), r});
        std::vector<double> conf;
        std::vector<std::uint8_t> y;
        clipped[r] = sample_world_columns(world, static_cast<std::size_t>(m), rng, conf, y);
        err[r] = std::abs(ece_value(conf, y, bins) - true_value);
    });
    std::size_t total_clipped = 0;
    for (auto c : clipped) total_clipped += c;

    SlopePoint pt;
    pt.k = world.gap_kind == GapKind::Sinusoid ? world.frequency : 0;
    pt.m = m;
    pt.bins = bins;
    pt.mean_error = mean(err);
    pt.error_se = stddev(err) / std::sqrt(static_cast<double>(replicates));
    pt.true_ece = true_value;
    pt.clip_fraction = static_cast<double>(total_clipped) / (static_cast<double>(m) * replicates);
    if (pt.clip_fraction > kMaxClipFraction)
        throw ExperimentAborted("clipping fraction " + std::to_string(pt.clip_fraction) + " exceeds 5%");
    return pt;
}

SlopeStudy slope_study(const SlopeConfig& cfg) {
    if (cfg.k_grid.empty()) throw InvalidParam("k grid must be non-empty");
    check_span(cfg.m_grid);
    SlopeStudy study;
    for (std::size_t ki = 0; ki < cfg.k_grid.size(); ++ki) {
        const int k = cfg.k_grid[ki];
        const auto world = slope_world(k, cfg.amplitude, cfg.eps, cfg.seed);
        const double truth = true_ece(world);
        std::vector<double> ms, errs;
        for (long m : cfg.m_grid) {
            auto pt = passive_error(world, world.lipschitz(), m, cfg.replicates, stream_key(cfg.seed, {ki, 3}), truth);
            pt.k = k;
            study.points.push_back(pt);
            ms.push_back(static_cast<double>(m));
            errs.push_back(pt.mean_error);
        }
        study.fits.push_back({k, loglog_fit(ms, errs)});
    }
    return study;
}

PseudoControl pseudo_classifier_control(const PseudoConfig& cfg) {
    if (cfg.classes < 2) throw InvalidParam("need at least two classes");
    if (cfg.N < 2) throw InvalidParam("N must be >= 2");
    if (!(cfg.eps_target > 0.0 && cfg.eps_target < 1.0)) throw InvalidParam("eps_target must be in (0,1)");
    if (cfg.replicates < 2) throw InvalidParam("need at least two replicates");
    const std::size_t N = cfg.N;
    const auto C = static_cast<std::size_t>(cfg.classes);

    std::vector<double> logits(N * C);
    Rng rng(cfg.seed, {0});
    for (auto& z : logits) z = rng.normal();

    // Deficit of the true class (class 0) against its best rival; the record is
    // wrong exactly when the margin is below the deficit.
    std::vector<double> deficit(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double* z = &logits[i * C];
        deficit[i] = *std::max_element(z + 1, z + C) - z[0];
    }
    std::vector<double> sorted = deficit;
    std::sort(sorted.begin(), sorted.end());
    const auto wrong = static_cast<std::size_t>(std::floor(cfg.eps_target * static_cast<double>(N) + 1e-9));
    PseudoControl out;
    out.margin = wrong >= N ? sorted.front() - 1.0 : sorted[N - wrong - 1];

    std::vector<double> conf(N);
    std::vector<std::uint8_t> correct(N);
    std::vector<double> row(C);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < C; ++c) row[c] = logits[i * C + c];
        row[0] += out.margin;
        const double top = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double v : row) total += std::exp(v - top);
        conf[i] = 1.0 / total;
        correct[i] = deficit[i] <= out.margin ? 1 : 0;
    }
    out.data = Dataset::from_columns("pseudo-classifier", conf, correct);
    out.eps_hat = error_rate(correct);
    out.L_hat = estimate_lipschitz(out.data).value;
    const double L = std::max(out.L_hat, 1e-6);
    const double eps = std::max(out.eps_hat, 1.0 / static_cast<double>(N));
    out.full_bins = optimal_bin_count(L, static_cast<double>(N), eps);
    out.full_ece = estimate_ece(out.data, out.full_bins).value;

    for (std::size_t mi = 0; mi < cfg.m_grid.size(); ++mi) {
        const std::size_t m = cfg.m_grid[mi];
        if (m < 1 || m > N) throw InvalidParam("subsample sizes must be in [1, N]");
        PseudoPoint pt;
        pt.m = m;
        pt.bins = optimal_bin_count(L, static_cast<double>(m), eps);
        std::vector<double> est(static_cast<std::size_t>(cfg.replicates));
        parallel_for(est.size(), [&](std::size_t r) {
            Rng srng(cfg.seed, {1, mi, r});
            std::vector<std::size_t> idx(N);
            for (std::size_t i = 0; i < N; ++i) idx[i] = i;
            std::vector<double> sc(m);
            std::vector<std::uint8_t> sy(m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(srng.below(N - i));
                std::swap(idx[i], idx[j]);
                sc[i] = conf[idx[i]];
                sy[i] = correct[idx[i]];
            }
            est[r] = estimate_ece(sc, sy, pt.bins).value;
        });
        pt.mean_ece = mean(est);
        pt.std_ece = stddev(est);
        pt.floor = verification_floor(L, eps, static_cast<double>(m));
        pt.floor_over_std = pt.std_ece > 0.0 ? pt.floor / pt.std_ece : std::numeric_limits<double>::infinity();
        out.points.push_back(pt);
    }
    return out;
}

long passive_cost(const SyntheticWorld& world, double L, double target, long m_min, long m_max, int replicates,
                  std::uint64_t seed, double* error_at_cost) {
    if (!(target > 0.0)) throw InvalidParam("target must be positive");
    if (m_min < 1 || m_max < m_min) throw InvalidParam("need 1 <= m_min <= m_max");
    const double truth = true_ece(world);
    auto err = [&](long m) { return passive_error(world, L, m, replicates, seed, truth).mean_error; };

    std::vector<long> grid;
    const double decades = std::log10(static_cast<double>(m_max) / static_cast<double>(m_min));
    const int steps = std::max(1, static_cast<int>(std::ceil(decades * 8.0)));
    for (int s = 0; s <= steps; ++s) {
        const long m = std::lround(static_cast<double>(m_min) * std::pow(10.0, decades * s / steps));
        if (grid.empty() || m > grid.back()) grid.push_back(std::min(m, m_max));
    }
    long prev = 0;
    for (long m : grid) {
        const double e = err(m);
        if (e > target) {
            prev = m;
            continue;
        }
        long lo = prev, hi = m;
        double e_hi = e;
        while (lo > 0 && hi - lo > 1) {
            const long mid = lo + (hi - lo) / 2;
            const double em = err(mid);
            if (em <= target) {
                hi = mid;
                e_hi = em;
            } else {
                lo = mid;
            }
        }
        if (error_at_cost) *error_at_cost = e_hi;
        return hi;
    }
    throw BudgetExceeded("no m up to " + std::to_string(m_max) + " reaches error " + std::to_string(target));
}

CompositionStudy compositional_experiment(const CompositionConfig& cfg) {
    if (cfg.K_grid.empty() || cfg.K_grid.front() != 1) throw InvalidParam("K grid must start at 1");
    if (!(cfg.L > 1.0)) throw InvalidParam("stage Lipschitz constant must exceed 1");
    CompositionStudy study;
    std::vector<double> ks, log_cost;
    for (std::size_t i = 0; i < cfg.K_grid.size(); ++i) {
        const int K = cfg.K_grid[i];
        if (K < 1) throw InvalidParam("K must be >= 1");
        const auto pipe = PipelineWorld::uniform_stages(K, cfg.L, cfg.eps);
        const auto world = pipe.as_world(cfg.seed);
        CompositionPoint pt;
        pt.K = K;
        pt.lipschitz_bound = pipe.stage_lipschitz_product() + 1.0;
        pt.lipschitz_emp = pipe.empirical_lipschitz();
        pt.true_ece = true_ece(world);
        pt.cost = passive_cost(world, pt.lipschitz_emp, cfg.delta_target, cfg.m_min, cfg.m_max, cfg.replicates,
                               stream_key(cfg.seed, {static_cast<std::uint64_t>(K), 11}), &pt.error_at_cost);
        study.points.push_back(pt);
        ks.push_back(K);
        log_cost.push_back(std::log(static_cast<double>(pt.cost)));
    }
    if (ks.size() >= 2) {
        study.fit = linear_fit(ks, log_cost);
        study.base = std::exp(study.fit.slope);
    }
    return study;
}

void write_csv(std::ostream& out, const std::vector<PhasePoint>& points) {
    out << "eps,m_eps,m,power,power_se,exact_power\n";
    for (const auto& p : points)
        out << p.eps << ',' << p.m_eps << ',' << p.m << ',' << p.power << ',' << p.power_se << ',' << p.exact_power
            << '\n';
}

void write_csv(std::ostream& out, const SlopeStudy& study) {
    out << "k,m,bins,mean_error,error_se,true_ece,clip_fraction\n";
    for (const auto& p : study.points)
        out << p.k << ',' << p.m << ',' << p.bins << ',' << p.mean_error << ',' << p.error_se << ',' << p.true_ece
            << ',' << p.clip_fraction << '\n';
    out << "# k,slope,slope_se\n";
    for (const auto& f : study.fits) out << "# " << f.k << ',' << f.fit.slope << ',' << f.fit.slope_stderr << '\n';
}

void write_csv(std::ostream& out, const PseudoControl& control) {
    out << "m,bins,mean_ece,std_ece,floor,floor_over_std\n";
    for (const auto& p : control.points)
        out << p.m << ',' << p.bins << ',' << p.mean_ece << ',' << p.std_ece << ',' << p.floor << ','
            << p.floor_over_std << '\n';
    out << "# eps_hat=" << control.eps_hat << " L_hat=" << control.L_hat << " full_ece=" << control.full_ece
        << " bins=" << control.full_bins << " margin=" << control.margin << '\n';
}

void write_csv(std::ostream& out, const CompositionStudy& study) {
    out << "K,lipschitz_bound,lipschitz_emp,true_ece,cost,error_at_cost\n";
    for (const auto& p : study.points)
        out << p.K << ',' << p.lipschitz_bound << ',' << p.lipschitz_emp << ',' << p.true_ece << ',' << p.cost << ','
            << p.error_at_cost << '\n';
    out << "# base=" << study.base << " slope_se=" << study.fit.slope_stderr << '\n';
}

void write_csv(std::ostream& out, const ActivePassiveStudy& study) {
    out << "L,m,active_error,active_se,passive_error,passive_se,no_signal_fraction\n";
    for (const auto& p : study.points)
        out << p.L << ',' << p.m << ',' << p.active_error << ',' << p.active_se << ',' << p.passive_error << ','
            << p.passive_se << ',' << p.no_signal_fraction << '\n';
    out << "# L,active_slope,passive_slope,ratio\n";
    for (const auto& f : study.fits)
        out << "# " << f.L << ',' << f.active.slope << ',' << f.passive.slope << ',' << f.ratio << '\n';
}

}  // namespace vtax
