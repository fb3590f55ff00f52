// One PASS/FAIL line per acceptance criterion, with the measured values.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vtax/active.hpp"
#include "vtax/audit.hpp"
#include "vtax/calculators.hpp"
#include "vtax/experiments.hpp"
#include "vtax/lecam.hpp"
#include "vtax/regression.hpp"
#include "vtax/sequential.hpp"
#include "vtax/synth.hpp"
#include "vtax/temp_scaling.hpp"

using namespace vtax;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[fail: " << what << "] ";
        }
    }
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    o.detail.precision(4);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << "[exception: " << e.what() << "] ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < budget_s, "runtime over " + std::to_string(static_cast<int>(budget_s)) + "s");
    if (!o.pass) ++failures;
    std::printf("%s %2d %s | %s| %.2fs\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
}

bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

// "Exact" real-valued results: equal up to double rounding of the formula.
bool exact(double x, double target) { return std::abs(x - target) <= 1e-12 * std::abs(target); }

}  // namespace

int main() {
    criterion(1, "closed-form golden numbers", 1.0, [](Outcome& o) {
        const struct {
            const char* name;
            double eps, n, want;
        } floors[] = {{"MMLU", 0.15, 14042, 0.0220}, {"TruthfulQA", 0.40, 817, 0.0788}, {"GPQA", 0.50, 198, 0.1362}};
        for (const auto& f : floors) {
            const double v = verification_floor(1, f.eps, f.n);
            o.detail << f.name << "=" << v << " ";
            o.require(near(v, f.want, 0.0005), f.name);
        }
        const double acc_mmlu = accuracy_floor(0.15, 14042), acc_gpqa = accuracy_floor(0.5, 198);
        o.detail << "acc MMLU=" << acc_mmlu << " GPQA=" << acc_gpqa << " ";
        o.require(near(acc_mmlu, 0.0060, 0.0002), "acc MMLU");
        o.require(near(acc_gpqa, 0.0709, 0.0010), "acc GPQA");

        const double eu = fairness_size(10, 0.05, 0.02, 0.05, 1, SizingMode::Passive);
        const double eu_act = fairness_size(10, 0.05, 0.02, 0.05, 1, SizingMode::Active);
        const double fda = fairness_size(8, 0.05, 0.01, 0.02, 1, SizingMode::Passive);
        o.detail << "EU=" << eu << " EU_act=" << eu_act << " FDA=" << fda << " ";
        o.require(exact(eu, 1.25e6) && exact(eu_act, 2.5e4) && exact(fda, 3.2e6), "sizing");

        const auto h = verification_horizon(0.5, 1, 14000, 1);
        o.detail << "N*_pass=" << h.n_star_passive << " N*_act=" << h.n_star_active << " ";
        o.require(exact(h.n_star_passive, 1.4e4) && exact(h.n_star_active, 1.96e8), "horizons");

        const auto hl = verification_half_life(0.02, 0.01, 1, 0.05);
        const int k = recalibration_trap(0.5, 0.05, 0.10, 14000);
        o.detail << "t_half=" << hl.t_half << " rate=" << hl.perpetual_rate << " K*=" << k << " ";
        o.require(exact(hl.t_half, 2.0), "t_half");
        o.require(near(hl.perpetual_rate, 3125, 1), "perpetual rate");
        o.require(k == 4, "K*");

        const auto ten = compositional_tax(std::vector<double>(10, 2.0), 0.1, 0.05);
        const auto two = compositional_tax({2.0, 2.0}, 0.1, 0.05);
        o.detail << "ratio=" << ten.cost_ratio << " Lsys=" << two.L_sys_bound << " ";
        o.require(exact(ten.cost_ratio, 1024) && exact(two.L_sys_bound, 5), "composition");

        const double real = verification_floor(2.84, 0.234, 817);
        o.detail << "real=" << real << " ";
        o.require(near(real, 0.093, 0.001), "real-model floor");
    });

    criterion(2, "phase transition collapse", 120.0, [](Outcome& o) {
        PhaseConfig cfg;
        const auto pts = phase_transition_experiment(cfg);
        for (const auto& p : pts) {
            if (p.m_eps == 0.1) o.require(p.power <= 0.2, "power at m*eps=0.1");
            if (p.m_eps == 10.0) o.require(p.power >= 0.8, "power at m*eps=10");
        }
        double spread = 0.0;
        for (double me : cfg.m_eps_grid) spread = std::max(spread, phase_spread(pts, me));
        o.require(spread < 0.15, "spread");
        double lo = 1, hi = 0;
        for (const auto& p : pts) {
            if (p.m_eps == 0.1) lo = std::min(lo, p.power);
            if (p.m_eps == 0.1) hi = std::max(hi, p.power);
        }
        double lo10 = 1;
        for (const auto& p : pts)
            if (p.m_eps == 10.0) lo10 = std::min(lo10, p.power);
        o.detail << "max power@0.1=" << hi << " min power@10=" << lo10 << " spread=" << spread << " ";
        // Dense grid, information only.
        PhaseConfig dense = cfg;
        dense.m_eps_grid = {0.1, 0.3, 1, 2, 3, 5, 10};
        dense.trials = 500;
        const auto dp = phase_transition_experiment(dense);
        double dspread = 0.0;
        for (double me : dense.m_eps_grid) dspread = std::max(dspread, phase_spread(dp, me));
        o.detail << "(dense-grid spread " << dspread << ") ";
    });

    criterion(3, "passive rate k=8", 300.0, [](Outcome& o) {
        SlopeConfig cfg;
        cfg.k_grid = {8};
        const auto st = slope_study(cfg);
        const double s = st.fits[0].fit.slope;
        o.detail << "slope=" << s << " se=" << st.fits[0].fit.slope_stderr << " ";
        o.require(s >= -0.40 && s <= -0.26, "slope in [-0.40,-0.26]");
    });

    criterion(4, "active verification", 300.0, [](Outcome& o) {
        ActiveStudyConfig cfg;
        const auto st = active_vs_passive_study(cfg);
        for (const auto& f : st.fits) {
            o.detail << "L=" << f.L << ": active " << f.active.slope << " passive " << f.passive.slope << " ratio "
                     << f.ratio << "; ";
            o.require(f.active.slope >= -0.60 && f.active.slope <= -0.40, "active slope");
            o.require(f.ratio >= 1.25 && f.ratio <= 1.70, "slope ratio");
        }
        std::vector<double> act, pas;
        for (std::size_t li = 0; li < cfg.L_grid.size(); ++li) {
            const double L = cfg.L_grid[li];
            const auto w = sinusoid_world(L / (2 * std::numbers::pi * cfg.frequency), cfg.frequency, cfg.eps,
                                          stream_key(cfg.seed, {li}));
            const auto pt = active_passive_point(w, 2000, cfg.replicates, stream_key(cfg.seed, {li, 21}));
            act.push_back(pt.active_error);
            pas.push_back(pt.passive_error);
        }
        const double cv = stddev(act) / mean(act);
        o.detail << "m=2000 active CV=" << cv << " passive=" << pas[0] << "/" << pas[1] << "/" << pas[2] << " ";
        o.require(cv <= 0.15, "active CV");
        o.require(pas[0] < pas[1] && pas[1] < pas[2], "passive increasing in L");
    });

    criterion(5, "compositional growth", 600.0, [](Outcome& o) {
        const auto st = compositional_experiment({});
        o.detail << "costs";
        for (const auto& p : st.points) o.detail << " " << p.cost;
        o.detail << " base=" << st.base << " ";
        o.require(st.base > 1.3, "base > 1.3");
        for (const auto& p : st.points)
            if (p.K == 2) {
                o.detail << "L_sys(K=2)=" << p.lipschitz_emp << " ";
                o.require(p.lipschitz_emp <= 5.5, "L_sys at K=2");
            }
    });

    criterion(6, "Le Cam constants", 30.0, [](Outcome& o) {
        const std::vector<double> eps{0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35};
        const std::vector<double> table{0.3780, 0.3638, 0.3474, 0.3326, 0.3206, 0.3093, 0.2982, 0.2873, 0.2759};
        double prev = 1.0, worst = 0.0;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const double c = lecam_constant(eps[i], LeCamBound::ExactLRT).c1;
            o.detail << c << " ";
            o.require(c < prev, "monotone");
            const double r = std::round(c * 100) / 100;
            o.require(r >= 0.28 && r <= 0.38, "range [0.28,0.38] at two decimals");
            o.require(c >= 0.184, ">= 0.184");
            worst = std::max(worst, std::abs(c - table[i]));
            prev = c;
        }
        o.require(worst < 5e-4, "table match");
        const double q = lecam_constant(0.1, LeCamBound::QuadraticBH).c1;
        o.detail << "max table dev=" << worst << " quadratic=" << q << " ";
        o.require(near(q, 0.2144, 1e-3), "quadratic control");
    });

    criterion(7, "self-verification impossibility", 10.0, [](Outcome& o) {
        for (const auto& est : default_label_free_estimators()) {
            for (double d : {1.0, 0.1, 0.3}) {
                HarnessConfig cfg;
                cfg.ece1 = d;
                const auto a = self_verification_harness(cfg, est.fn);
                const auto b = self_verification_harness(cfg, est.fn);
                o.require(a.identical && a.streams_identical, est.name + " identical");
                o.require(std::memcmp(&a.out0, &b.out0, sizeof(double)) == 0, est.name + " deterministic");
                o.require(a.floor == (d == 1.0 ? 0.5 : d / 2), est.name + " floor");
            }
            o.detail << est.name << " ok; ";
        }
    });

    criterion(8, "sequential monitor", 600.0, [](Outcome& o) {
        SequentialConfig cfg;
        cfg.alpha = 0.05;
        cfg.delta = 0.02;
        const auto st = sequential_study(sinusoid_world(0.0, 3, 0.05, 0), 1000, 100000, cfg);
        o.detail << "violation=" << st.violation_fraction << " E[tau]=" << st.mean_stop_time
                 << " min tau=" << st.min_stop_time << " Wald=" << st.wald_bound << " ";
        o.require(st.violation_fraction <= 0.07, "coverage");
        o.require(st.mean_stop_time >= st.wald_bound, "E[tau] >= Wald");
    });

    criterion(9, "temperature scaling", 600.0, [](Outcome& o) {
        const auto st = parametric_rate_study({});
        const double ratio = temperature_efficiency_ratio(1e4, 0.05);
        o.detail << "slope=" << st.fit.slope << " efficiency ratio=" << ratio << " ";
        o.require(st.fit.slope >= -0.60 && st.fit.slope <= -0.40, "slope");
        o.require(near(ratio, 0.05, 0.01), "efficiency ratio 0.05");
    });

    criterion(10, "fixtures", 1.0, [](Outcome& o) {
        const auto pairs = load_pairs(fixture_path("pairs.csv"));
        int no = 0;
        for (const auto& p : pairs) no += p.verdict == "NO" && classify_gap(p.gap, p.delta_acc) == Verdict::No;
        o.detail << "NO verdicts " << no << "/" << pairs.size() << " ";
        o.require(pairs.size() == 10 && no == 10, "pair verdicts");
        const auto s = leaderboard_noise(load_subjects(fixture_path("subjects.csv")), FloorSource::Fixture);
        const int flags = static_cast<int>(s.subjects.size()) - s.flag_mismatches;
        o.detail << "flags " << flags << "/" << s.subjects.size() << " ";
        o.require(s.subjects.size() == 20 && s.flag_mismatches == 0, "subject flags");
    });

    criterion(11, "pseudo-classifier control", 180.0, [](Outcome& o) {
        const auto c = pseudo_classifier_control({});
        o.detail << "eps=" << c.eps_hat << " ECE=" << c.full_ece << " floor/std:";
        o.require(c.eps_hat >= 0.08 && c.eps_hat <= 0.12, "eps");
        o.require(c.full_ece >= 0.25 && c.full_ece <= 0.37, "full ECE");
        bool within = true;
        for (const auto& p : c.points) {
            // At m = N the subsample is the population and the std is zero.
            if (p.m == c.data.size()) continue;
            o.detail << " " << p.floor_over_std;
            within = within && p.floor_over_std <= 3.0 && p.floor_over_std >= 1.0 / 3.0;
        }
        o.detail << " ";
        o.require(within, "std within 3x of floor");
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
