#include "vtax/temp_scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vtax/error.hpp"
#include "vtax/parallel.hpp"

namespace vtax {

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct Interior {
    std::vector<double> z;
    std::vector<std::uint8_t> y;
    std::size_t excluded = 0;
};

Interior interior(std::span<const double> conf, std::span<const std::uint8_t> correct) {
    if (conf.size() != correct.size()) throw InvalidParam("column length mismatch");
    if (conf.empty()) throw EmptyDataset();
    Interior in;
    for (std::size_t i = 0; i < conf.size(); ++i) {
        if (conf[i] <= 0.0 || conf[i] >= 1.0) {
            ++in.excluded;
            continue;
        }
        in.z.push_back(logit(conf[i]));
        in.y.push_back(correct[i]);
    }
    return in;
}

// NLL as a function of beta = 1/T; convex in beta.
double nll_beta(const Interior& in, double beta) {
    double s = 0.0;
    for (std::size_t i = 0; i < in.z.size(); ++i) {
        const double x = beta * in.z[i];
        s += in.y[i] ? softplus(-x) : softplus(x);
    }
    return s;
}

// First and second derivative of the NLL in beta.
std::pair<double, double> nll_beta_derivs(const Interior& in, double beta) {
    double g = 0.0, h = 0.0;
    for (std::size_t i = 0; i < in.z.size(); ++i) {
        const double s = sigmoid(beta * in.z[i]);
        g += (s - in.y[i]) * in.z[i];
        h += s * (1.0 - s) * in.z[i] * in.z[i];
    }
    return {g, h};
}

}  // namespace

double temperature_nll(std::span<const double> conf, std::span<const std::uint8_t> correct, double T) {
    if (!(T > 0.0)) throw InvalidParam("temperature must be positive");
    const auto in = interior(conf, correct);
    if (in.z.empty()) throw AllBoundary();
    return nll_beta(in, 1.0 / T);
}

TempFit fit_temperature(std::span<const double> conf, std::span<const std::uint8_t> correct,
                        const TempFitOptions& opt) {
    if (!(opt.t_lo > 0.0 && opt.t_lo < opt.t_hi)) throw InvalidParam("invalid temperature bracket");
    const auto in = interior(conf, correct);
    if (in.z.empty()) throw AllBoundary();

    TempFit fit;
    fit.used = in.z.size();
    fit.excluded_boundary = in.excluded;
    double fi = 0.0, kappa = 0.0;
    for (double z : in.z) {
        const double p = sigmoid(z);
        fi += p * (1.0 - p) * z * z;
        kappa += p * (1.0 - p) * std::abs(z);
    }
    fit.fisher_info_at_1 = fi / static_cast<double>(in.z.size());
    fit.kappa = kappa / static_cast<double>(in.z.size());
    fit.neg_log_lik_at_1 = nll_beta(in, 1.0);

    const double n = static_cast<double>(in.z.size());
    if (fi <= 1e-12 * n) {
        // Every logit is zero: the likelihood does not depend on T.
        fit.degenerate = true;
        fit.degenerate_reason = "flat likelihood: all confidences equal 0.5";
        fit.t_hat = 1.0;
        fit.neg_log_lik = fit.neg_log_lik_at_1;
        return fit;
    }

    // Bracket the root of the beta-derivative, widening geometrically if the
    // optimum sits beyond either edge.
    double b_lo = 1.0 / opt.t_hi, b_hi = 1.0 / opt.t_lo;
    constexpr double kBetaMin = 1e-6, kBetaMax = 1e6;
    while (nll_beta_derivs(in, b_lo).first > 0.0 && b_lo > kBetaMin) b_lo /= 4.0;
    while (nll_beta_derivs(in, b_hi).first < 0.0 && b_hi < kBetaMax) b_hi *= 4.0;
    const double g_lo = nll_beta_derivs(in, b_lo).first;
    const double g_hi = nll_beta_derivs(in, b_hi).first;
    // For separable labels the derivative underflows to exactly 0 once every
    // sigmoid saturates, which stops the widening before the cap.
    const bool lo_open = g_lo > 0.0;
    const bool hi_open = g_hi <= 0.0;
    if (lo_open || hi_open) {
        fit.degenerate = true;
        fit.degenerate_reason = lo_open ? "likelihood keeps improving as T grows without bound"
                                           : "likelihood keeps improving as T shrinks to 0 (separable labels)";
        const double b = lo_open ? b_lo : b_hi;
        fit.t_hat = 1.0 / b;
        fit.neg_log_lik = nll_beta(in, b);
        return fit;
    }

    // Safeguarded Newton on the derivative (falls back to bisection).
    double b = std::clamp(1.0, b_lo, b_hi);
    for (int it = 0; it < 200; ++it) {
        fit.iterations = it + 1;
        const auto [g, h] = nll_beta_derivs(in, b);
        if (g > 0.0) b_hi = b;
        else b_lo = b;
        double next = h > 0.0 ? b - g / h : 0.5 * (b_lo + b_hi);
        if (!(next > b_lo && next < b_hi)) next = 0.5 * (b_lo + b_hi);
        const double step = std::abs(next - b);
        b = next;
        if (step <= opt.rel_tol * b * 1e-2 || (b_hi - b_lo) <= opt.rel_tol * b * 1e-2) break;
    }
    fit.t_hat = 1.0 / b;
    fit.neg_log_lik = nll_beta(in, b);

    if (opt.check_unimodal) {
        // Descent then ascent on a log-spaced grid; any second descent run
        // would contradict convexity.
        fit.unimodal_checked = true;
        constexpr int kGrid = 64;
        int sign_changes = 0;
        double prev = nll_beta(in, 1.0 / opt.t_lo);
        int prev_dir = 0;
        for (int i = 1; i <= kGrid; ++i) {
            const double t = opt.t_lo * std::pow(opt.t_hi / opt.t_lo, static_cast<double>(i) / kGrid);
            const double v = nll_beta(in, 1.0 / t);
            const double d = v - prev;
            const int dir = std::abs(d) <= 1e-12 * std::max(1.0, std::abs(v)) ? 0 : (d > 0.0 ? 1 : -1);
            if (dir != 0) {
                if (prev_dir != 0 && dir != prev_dir) ++sign_changes;
                prev_dir = dir;
            }
            prev = v;
        }
        fit.unimodal = sign_changes <= 1;
    }
    return fit;
}

TempFit fit_temperature(const Dataset& data, const TempFitOptions& opt) {
    return fit_temperature(data.confidence(), data.correct(), opt);
}

double fisher_info(std::span<const double> conf) {
    double s = 0.0;
    std::size_t n = 0;
    for (double p : conf) {
        if (p <= 0.0 || p >= 1.0) continue;
        const double z = logit(p);
        s += p * (1.0 - p) * z * z;
        ++n;
    }
    if (n == 0) throw AllBoundary();
    return s / static_cast<double>(n);
}

double fisher_info(const Dataset& data) { return fisher_info(data.confidence()); }

double fisher_info_approx(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidParam("eps must be in (0,1)");
    const double l = std::log(1.0 / eps);
    return eps * l * l;
}

double fisher_info_uniform() { return std::numbers::pi * std::numbers::pi / 18.0 - 1.0 / 3.0; }

Dataset sample_temperature_world(std::size_t m, double t_star, const ScoreLaw& law, Rng& rng) {
    if (m == 0) throw InvalidParam("m must be >= 1");
    if (!(t_star > 0.0)) throw InvalidParam("T* must be positive");
    law.validate();
    std::vector<double> conf(m);
    std::vector<std::uint8_t> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        double p = law.sample(rng);
        p = std::clamp(p, 1e-12, 1.0 - 1e-12);
        conf[i] = p;
        y[i] = rng.uniform() < sigmoid(logit(p) / t_star) ? 1 : 0;
    }
    return Dataset::from_columns("temperature", std::move(conf), std::move(y));
}

double temperature_efficiency_ratio(double m, double L_eps) {
    if (!(m >= 1.0) || !(L_eps > 0.0)) throw InvalidParam("need m >= 1 and L*eps > 0");
    return (1.0 / std::sqrt(m)) / std::cbrt(L_eps / m);
}

RateStudy parametric_rate_study(const RateStudyConfig& cfg) {
    if (cfg.m_grid.size() < 2) throw InvalidParam("need at least two m values");
    const auto [mn, mx] = std::minmax_element(cfg.m_grid.begin(), cfg.m_grid.end());
    if (std::log10(*mx / *mn) < 1.5 - 1e-9) throw InvalidParam("m grid must span at least 1.5 decades");
    if (cfg.replicates < 2) throw InvalidParam("need at least two replicates");

    RateStudy study;
    std::vector<double> ms, errs;
    for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi) {
        const auto m = static_cast<std::size_t>(cfg.m_grid[gi]);
        std::vector<double> e(static_cast<std::size_t>(cfg.replicates));
        parallel_for(e.size(), [&](std::size_t r) {
            Rng rng(cfg.seed, {gi, r});
            const auto data = sample_temperature_world(m, cfg.t_star, cfg.law, rng);
            TempFitOptions opt;
            opt.check_unimodal = false;
            e[r] = std::abs(fit_temperature(data, opt).t_hat - cfg.t_star);
        });
        RatePoint pt;
        pt.m = static_cast<double>(m);
        pt.mean_abs_error = mean(e);
        pt.se = stddev(e) / std::sqrt(static_cast<double>(e.size()));
        study.points.push_back(pt);
        ms.push_back(pt.m);
        errs.push_back(pt.mean_abs_error);
    }
    study.fit = loglog_fit(ms, errs);
    return study;
}

}  // namespace vtax
