#include "vtax/calculators.hpp"

#include <cmath>
#include <limits>

#include "vtax/error.hpp"

namespace vtax {

namespace {

constexpr double kRel = 1e-9;

void require(bool ok, const char* what) {
    if (!ok) throw InvalidParam(what);
}

bool unit_closed(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::No: return "NO";
        case Verdict::Marginal: return "Marginal";
        case Verdict::Yes: return "YES";
    }
    return "?";
}

double ceil_count(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= kRel * std::max(1.0, std::abs(r))) return r;
    return std::ceil(x);
}

double floor_count(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= kRel * std::max(1.0, std::abs(r))) return r;
    return std::floor(x);
}

double verification_floor(double L, double eps, double n) {
    require(L > 0.0, "L must be positive");
    require(unit_closed(eps), "eps must be in [0,1]");
    require(n >= 1.0, "n must be >= 1");
    return std::cbrt(L * eps / n);
}

double accuracy_floor(double eps, double n) {
    require(unit_closed(eps), "eps must be in [0,1]");
    require(n >= 1.0, "n must be >= 1");
    return 2.0 * std::sqrt(eps * (1.0 - eps) / n);
}

FloorReport floor_report(const RateParams& p, double threshold_ratio) {
    require(threshold_ratio >= 1.0, "threshold ratio must be >= 1");
    FloorReport r;
    r.inputs = p;
    r.ece_floor = verification_floor(p.lipschitz, p.error_rate, p.samples);
    r.acc_floor = accuracy_floor(p.error_rate, p.samples);
    r.verdict_threshold_ratio = threshold_ratio;
    return r;
}

double holdout_size(double L, double eps, double delta) {
    require(L > 0.0, "L must be positive");
    require(unit_closed(eps), "eps must be in [0,1]");
    require(delta > 0.0 && delta <= 1.0, "delta must be in (0,1]");
    return std::max(1.0, ceil_count(L * eps / (delta * delta * delta)));
}

double fairness_size(int K, double pi_min, double delta, double eps, double L, SizingMode mode) {
    require(K >= 1, "K must be >= 1");
    require(pi_min > 0.0 && pi_min <= 1.0, "pi_min must be in (0,1]");
    require(delta > 0.0 && delta <= 1.0, "delta must be in (0,1]");
    require(unit_closed(eps), "eps must be in [0,1]");
    require(L > 0.0, "L must be positive");
    if (mode == SizingMode::Passive) return K * L * eps / (pi_min * delta * delta * delta);
    return K * eps / (pi_min * delta * delta);
}

CompositionalTax compositional_tax(const std::vector<double>& per_stage_L, double eps, double delta) {
    require(!per_stage_L.empty(), "need at least one stage");
    require(unit_closed(eps), "eps must be in [0,1]");
    require(delta > 0.0 && delta <= 1.0, "delta must be in (0,1]");
    double prod = 1.0;
    for (double l : per_stage_L) {
        require(l > 0.0, "stage L must be positive");
        prod *= l;
    }
    CompositionalTax t;
    t.cost_ratio = prod;
    t.L_sys_bound = prod + 1.0;
    t.m_sys = t.L_sys_bound * eps / (delta * delta * delta);
    return t;
}

int max_verifiable_depth(double M_total, double delta, double eps, double L) {
    require(M_total > 0.0, "M_total must be positive");
    require(delta > 0.0 && delta <= 1.0, "delta must be in (0,1]");
    require(eps > 0.0 && eps <= 1.0, "eps must be in (0,1]");
    if (!(L > 1.0)) throw UnboundedDepth();
    const double arg = M_total * delta * delta * delta / eps;
    if (arg < 1.0) return 0;
    return static_cast<int>(floor_count(std::log(arg) / std::log(L)));
}

HorizonReport verification_horizon(double alpha, double c0, double M_total, double L,
                                   std::optional<double> model_size) {
    require(alpha > 0.0, "alpha must be positive");
    require(c0 > 0.0, "c0 must be positive");
    require(M_total > 0.0, "M_total must be positive");
    require(L > 0.0, "L must be positive");
    HorizonReport h;
    h.alpha = alpha;
    h.c0 = c0;
    h.m_total = M_total;
    h.L = L;
    h.n_star_passive = std::pow(c0 * c0 * M_total / L, 1.0 / (2.0 * alpha));
    h.n_star_active = std::pow(c0 * M_total, 1.0 / alpha);
    if (model_size) {
        require(*model_size > 0.0, "model size must be positive");
        h.model_size = model_size;
        h.gap_ratio = *model_size / h.n_star_passive;
    }
    return h;
}

int recalibration_trap(double gamma, double eps, double ece0, double M_total) {
    require(gamma > 0.0 && gamma < 1.0, "gamma must be in (0,1)");
    require(eps > 0.0 && eps <= 1.0, "eps must be in (0,1]");
    require(ece0 > 0.0, "ECE0 must be positive");
    require(M_total > 0.0, "M_total must be positive");
    const double arg = M_total * (1.0 - gamma) * (1.0 - gamma) * ece0 * ece0 / eps;
    if (arg <= 1.0) return 0;
    const double k = floor_count(std::log(arg) / (2.0 * std::log(1.0 / gamma)));
    return static_cast<int>(std::max(0.0, k));
}

HalfLife verification_half_life(double delta, double lambda, double L, double eps) {
    require(delta > 0.0 && delta <= 1.0, "delta must be in (0,1]");
    require(lambda >= 0.0, "lambda must be non-negative");
    require(L > 0.0, "L must be positive");
    require(unit_closed(eps), "eps must be in [0,1]");
    HalfLife h;
    if (lambda == 0.0) {
        h.t_half = std::numeric_limits<double>::infinity();
        h.unbounded = true;
    } else {
        h.t_half = delta / lambda;
    }
    h.perpetual_rate = L * eps * lambda / std::pow(delta, 4);
    return h;
}

TransferSize transfer_size(double L_h, double eps2, double delta_ft, std::optional<double> baseline_L,
                           std::optional<double> baseline_delta) {
    require(L_h > 0.0, "L_h must be positive");
    require(eps2 > 0.0 && eps2 <= 1.0, "eps2 must be in (0,1]");
    require(delta_ft > 0.0 && delta_ft <= 1.0, "delta_ft must be in (0,1]");
    TransferSize t;
    t.m2 = L_h * eps2 / (delta_ft * delta_ft * delta_ft);
    if (baseline_L || baseline_delta) {
        const double bl = baseline_L.value_or(L_h);
        const double bd = baseline_delta.value_or(delta_ft);
        require(bl > 0.0 && bd > 0.0 && bd <= 1.0, "invalid baseline");
        // Unrounded baseline so the saving is the pure formula ratio.
        t.baseline = bl * eps2 / (bd * bd * bd);
        t.saving = *t.baseline / t.m2;
    }
    return t;
}

double effective_samples_mixing(double m, double rho) {
    require(m >= 0.0, "m must be non-negative");
    require(rho >= 0.0 && rho < 1.0, "rho must be in [0,1)");
    return m * (1.0 - rho);
}

DynamicsFloor dynamics_floor(double L, double c0, double r, double beta, double t) {
    require(L > 0.0, "L must be positive");
    require(c0 > 0.0, "c0 must be positive");
    require(r > 0.0, "r must be positive");
    require(t > 0.0, "t must be positive");
    require(beta >= 0.0, "beta must be non-negative");
    DynamicsFloor d;
    d.floor_at_t = std::cbrt(L * c0 / r) * std::pow(t, -(beta + 1.0) / 3.0);
    const double target = c0 * std::pow(t, -beta);
    // Strict inequality; the equality case sits on the boundary and is not
    // meaningful. Compare with a relative guard so rounding cannot flip it.
    d.meaningful = d.floor_at_t < target * (1.0 - 1e-12);
    return d;
}

Verdict classify_gap(double gap, double floor, double threshold_ratio) {
    require(gap >= 0.0, "gap must be non-negative");
    require(floor >= 0.0, "floor must be non-negative");
    require(threshold_ratio >= 1.0, "threshold ratio must be >= 1");
    if (gap < floor) return Verdict::No;
    if (gap < threshold_ratio * floor) return Verdict::Marginal;
    return Verdict::Yes;
}

}  // namespace vtax
