#include "vtax/lecam.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/kernels.hpp"

namespace vtax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogy_ratio(double x, double y) {
    if (x == 0.0) return 0.0;
    if (y == 0.0) return kInf;
    return x * std::log(x / y);
}

std::vector<double> binomial_pmf(int m, double p) {
    std::vector<double> pmf(static_cast<std::size_t>(m) + 1, 0.0);
    if (p <= 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    if (p >= 1.0) {
        pmf[static_cast<std::size_t>(m)] = 1.0;
        return pmf;
    }
    const double lp = std::log(p), lq = std::log1p(-p);
    const double lm = std::lgamma(m + 1.0);
    for (int k = 0; k <= m; ++k)
        pmf[static_cast<std::size_t>(k)] =
            std::exp(lm - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) + k * lp + (m - k) * lq);
    return pmf;
}

void check_eps(double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw InvalidParam("eps must be in (0, 0.5)");
}

}  // namespace

double bernoulli_kl(double p, double q) {
    if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) throw InvalidParam("KL arguments must be in [0,1]");
    return xlogy_ratio(p, q) + xlogy_ratio(1.0 - p, 1.0 - q);
}

std::string_view bound_name(LeCamBound b) {
    switch (b) {
        case LeCamBound::BretagnolleHuber: return "bretagnolle-huber";
        case LeCamBound::Pinsker: return "pinsker";
        case LeCamBound::ExactLRT: return "exact-lrt";
        case LeCamBound::QuadraticBH: return "quadratic-kl";
    }
    return "?";
}

LeCamBound parse_bound(std::string_view s) {
    if (s == "bretagnolle-huber" || s == "bh") return LeCamBound::BretagnolleHuber;
    if (s == "pinsker") return LeCamBound::Pinsker;
    if (s == "exact-lrt" || s == "exact") return LeCamBound::ExactLRT;
    if (s == "quadratic-kl" || s == "quadratic") return LeCamBound::QuadraticBH;
    throw InvalidParam("unknown bound: " + std::string(s));
}

double binomial_tv(int m, double p, double q) {
    if (m < 0) throw InvalidParam("m must be non-negative");
    if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) throw InvalidParam("probabilities must be in [0,1]");
    const auto a = binomial_pmf(m, p);
    const auto b = binomial_pmf(m, q);
    double tv = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) tv += std::abs(a[k] - b[k]);
    return std::min(1.0, 0.5 * tv);
}

double lecam_risk(double eps, double delta, LeCamBound bound, int m) {
    check_eps(eps);
    if (!(delta > 0.0 && delta < eps + 1e-15)) throw InvalidParam("delta must be in (0, eps]");
    if (m < 1) throw InvalidParam("m must be >= 1");
    const double p0 = 1.0 - eps;
    const double p1 = p0 - delta;
    switch (bound) {
        case LeCamBound::BretagnolleHuber: return 0.5 * delta * std::exp(-m * bernoulli_kl(p0, p1));
        case LeCamBound::Pinsker:
            return 0.5 * delta * std::max(0.0, 1.0 - std::sqrt(m * bernoulli_kl(p0, p1) / 2.0));
        case LeCamBound::ExactLRT: return 0.5 * delta * (1.0 - binomial_tv(m, eps, eps + delta));
        case LeCamBound::QuadraticBH: return 0.5 * delta * std::exp(-m * delta * delta / eps);
    }
    return 0.0;
}

LeCamConstant lecam_constant(double eps, LeCamBound bound, int m_ref) {
    check_eps(eps);
    if (m_ref < 1) throw InvalidParam("m_ref must be >= 1");
    const double hi = 0.999 * eps;
    auto f = [&](double d) { return lecam_risk(eps, d, bound, m_ref); };

    // Coarse grid to bracket the maximum, then golden-section inside it.
    constexpr int kGrid = 400;
    int best = 1;
    double best_val = -1.0;
    for (int i = 1; i <= kGrid; ++i) {
        const double v = f(hi * i / kGrid);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = hi * (best - 1) / kGrid;
    double b = hi * std::min(best + 1, kGrid) / kGrid;
    a = std::max(a, hi * 1e-9);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-12 * eps) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    LeCamConstant out;
    out.delta_star = 0.5 * (a + b);
    out.risk = std::max(f(out.delta_star), best_val);
    if (best_val > out.risk) out.delta_star = hi * best / kGrid;
    out.c1 = std::sqrt(m_ref / eps) * out.risk;
    return out;
}

void TwoPointHypotheses::validate() const {
    if (!(p0 > 0.0 && p0 <= 1.0)) throw InvalidParam("p0 must be in (0,1]");
    if (!(delta >= 0.0 && delta <= p0)) throw InvalidParam("delta must be in [0, p0]");
    if (m < 1) throw InvalidParam("m must be >= 1");
}

double exact_detection_power(const TwoPointHypotheses& hyp, double alpha) {
    hyp.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParam("alpha must be in (0,1)");
    if (hyp.m > 1'000'000) throw InvalidParam("m too large for exact power");
    const int m = static_cast<int>(hyp.m);
    const double e0 = 1.0 - hyp.p0, e1 = e0 + hyp.delta;
    const auto f0 = binomial_pmf(m, e0);
    const auto f1 = binomial_pmf(m, e1);
    // Reject for large error counts: S > c always, S == c with probability g.
    double tail0 = 0.0, tail1 = 0.0;
    for (int c = m; c >= 0; --c) {
        const double p0c = f0[static_cast<std::size_t>(c)];
        if (tail0 + p0c > alpha) {
            const double g = p0c > 0.0 ? (alpha - tail0) / p0c : 0.0;
            return std::min(1.0, tail1 + g * f1[static_cast<std::size_t>(c)]);
        }
        tail0 += p0c;
        tail1 += f1[static_cast<std::size_t>(c)];
    }
    return std::min(1.0, tail1);
}

double detection_power(const TwoPointHypotheses& hyp, double alpha, int trials, std::uint64_t seed) {
    hyp.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParam("alpha must be in (0,1)");
    if (trials < 100) throw InvalidParam("trials must be >= 100");
    const double e0 = 1.0 - hyp.p0, e1 = e0 + hyp.delta;

    std::vector<std::int64_t> s0(static_cast<std::size_t>(trials)), s1(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        Rng r0(seed, {0, static_cast<std::uint64_t>(t)});
        Rng r1(seed, {1, static_cast<std::uint64_t>(t)});
        s0[static_cast<std::size_t>(t)] = r0.binomial(hyp.m, e0);
        s1[static_cast<std::size_t>(t)] = r1.binomial(hyp.m, e1);
    }

    // Empirical null: choose c and g with P0(S > c) + g P0(S = c) = alpha.
    std::sort(s0.begin(), s0.end());
    const double T = trials;
    const std::int64_t cap = static_cast<std::int64_t>(std::floor(alpha * T));
    // The cap-th largest null draw sets the threshold.
    std::int64_t c = s0[static_cast<std::size_t>(trials) - 1 - static_cast<std::size_t>(std::min<std::int64_t>(cap, trials - 1))];
    auto above = static_cast<double>(s0.end() - std::upper_bound(s0.begin(), s0.end(), c));
    auto equal = static_cast<double>(std::upper_bound(s0.begin(), s0.end(), c) -
                                     std::lower_bound(s0.begin(), s0.end(), c));
    double g = equal > 0.0 ? (alpha * T - above) / equal : 0.0;
    g = std::clamp(g, 0.0, 1.0);

    double rejections = 0.0;
    for (std::int64_t s : s1) rejections += s > c ? 1.0 : (s == c ? g : 0.0);
    return rejections / T;
}

long detection_sample_size(double eps, double alpha, double power) {
    check_eps(eps);
    if (!(power > 0.0 && power < 1.0)) throw InvalidParam("power must be in (0,1)");
    auto reaches = [&](long m) {
        return exact_detection_power({1.0 - eps, eps, m}, alpha) >= power;
    };
    long hi = 1;
    while (!reaches(hi)) {
        hi *= 2;
        if (hi > 1'000'000) throw BudgetExceeded("detection sample size beyond 1e6");
    }
    long lo = hi / 2;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        (reaches(mid) ? hi : lo) = mid;
    }
    return hi;
}

double mean_confidence_estimator(std::span<const LabelFreeObservation> obs) {
    if (obs.empty()) throw EmptyDataset();
    double s = 0.0;
    for (const auto& o : obs) s += o.confidence;
    return s / static_cast<double>(obs.size());
}

namespace {

// Binned |mean proxy - mean confidence| with equal-width bins.
double binned_proxy_gap(std::span<const LabelFreeObservation> obs, int bins, bool proxy_is_confidence) {
    if (obs.empty()) throw EmptyDataset();
    std::vector<double> conf(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) conf[i] = obs[i].confidence;
    std::vector<std::int32_t> idx(obs.size());
    kernels::assign_bins(conf, bins, idx);
    std::vector<double> sp(static_cast<std::size_t>(bins), 0.0), sq(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto b = static_cast<std::size_t>(idx[i]);
        sp[b] += obs[i].confidence;
        sq[b] += proxy_is_confidence ? obs[i].confidence : obs[i].aux;
    }
    double total = 0.0;
    for (std::size_t b = 0; b < sp.size(); ++b) total += std::abs(sq[b] - sp[b]);
    return total / static_cast<double>(obs.size());
}

}  // namespace

double self_consistency_estimator(std::span<const LabelFreeObservation> obs) {
    return binned_proxy_gap(obs, 10, false);
}

double pseudo_label_ece_estimator(std::span<const LabelFreeObservation> obs) {
    // Pseudo-labels are the model's own argmax, so the self-assessed chance of
    // being right is the confidence itself: every bin gap is identically 0.
    return binned_proxy_gap(obs, 10, true);
}

std::vector<NamedEstimator> default_label_free_estimators() {
    return {{"mean-confidence", mean_confidence_estimator},
            {"self-consistency", self_consistency_estimator},
            {"pseudo-label-ece", pseudo_label_ece_estimator}};
}

std::vector<LabelFreeObservation> label_free_stream(const HarnessConfig& cfg) {
    cfg.score_law.validate();
    if (cfg.m == 0) throw InvalidParam("m must be >= 1");
    if (cfg.votes < 1) throw InvalidParam("votes must be >= 1");
    // Only the seed and the score law enter here; nothing about either
    // world's accuracy function does.
    Rng rng(cfg.seed, {0});
    std::vector<LabelFreeObservation> obs(cfg.m);
    for (auto& o : obs) {
        o.feature = rng.uniform();
        o.confidence = cfg.score_law.sample(rng);
        int agree = 0;
        for (int v = 0; v < cfg.votes; ++v) agree += rng.bernoulli(o.confidence) ? 1 : 0;
        o.aux = static_cast<double>(agree) / cfg.votes;
    }
    return obs;
}

HarnessResult self_verification_harness(const HarnessConfig& cfg, const LabelFreeEstimator& estimator) {
    for (double e : {cfg.ece0, cfg.ece1})
        if (!(e >= 0.0 && e <= 1.0)) throw InvalidParam("world ECE must be in [0,1]");
    if (!estimator) throw InvalidParam("estimator is empty");

    const auto stream0 = label_free_stream(cfg);
    const auto stream1 = label_free_stream(cfg);

    HarnessResult r;
    r.streams_identical = stream0.size() == stream1.size() &&
                          std::memcmp(stream0.data(), stream1.data(),
                                      stream0.size() * sizeof(LabelFreeObservation)) == 0;
    r.out0 = estimator(stream0);
    r.out1 = estimator(stream1);
    r.identical = std::memcmp(&r.out0, &r.out1, sizeof(double)) == 0;
    r.floor = std::abs(cfg.ece1 - cfg.ece0) / 2.0;

    // Labels exist only on the evaluator's side of the wall.
    Rng label_rng(cfg.seed, {1});
    const std::size_t m = cfg.m;
    std::vector<double> conf(m);
    std::vector<std::uint8_t> y0(m), y1(m);
    std::size_t clipped1 = 0;
    double gap0 = 0.0, gap1 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double p = stream0[i].confidence;
        conf[i] = p;
        const double eta0 = std::max(0.0, p - cfg.ece0);
        const double raw1 = p - cfg.ece1;
        const double eta1 = std::max(0.0, raw1);
        clipped1 += raw1 < 0.0 ? 1 : 0;
        gap0 += p - eta0;
        gap1 += p - eta1;
        const double u = label_rng.uniform();
        y0[i] = u < eta0 ? 1 : 0;
        y1[i] = u < eta1 ? 1 : 0;
    }
    r.realized_ece0 = gap0 / static_cast<double>(m);
    r.realized_ece1 = gap1 / static_cast<double>(m);
    r.clip_fraction1 = static_cast<double>(clipped1) / static_cast<double>(m);
    auto label_ece = [&](const std::vector<std::uint8_t>& y) {
        const double eps = std::max(error_rate(y), 1.0 / static_cast<double>(m));
        return estimate_ece(conf, y, optimal_bin_count(1.0, static_cast<double>(m), eps)).value;
    };
    r.label_ece0 = label_ece(y0);
    r.label_ece1 = label_ece(y1);
    return r;
}

}  // namespace vtax
