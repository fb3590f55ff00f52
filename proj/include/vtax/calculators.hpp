#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtax/core_types.hpp"

namespace vtax {

struct FloorReport {
    double ece_floor = 0.0;
    double acc_floor = 0.0;
    RateParams inputs;
    double verdict_threshold_ratio = 1.25;
};

struct HorizonReport {
    double n_star_passive = 0.0;
    double n_star_active = 0.0;
    double alpha = 0.5;
    double c0 = 1.0;
    double m_total = 1.0;
    double L = 1.0;
    std::optional<double> model_size;
    std::optional<double> gap_ratio;  // N / N*_passive
};

struct CompositionalTax {
    double L_sys_bound = 0.0;
    double m_sys = 0.0;
    double cost_ratio = 0.0;
};

struct HalfLife {
    double t_half = 0.0;  // +inf when lambda == 0
    double perpetual_rate = 0.0;
    bool unbounded = false;
};

struct TransferSize {
    double m2 = 0.0;
    std::optional<double> baseline;
    std::optional<double> saving;
};

struct DynamicsFloor {
    double floor_at_t = 0.0;
    bool meaningful = false;
    double critical_beta = 0.5;
    double critical_beta_active = 1.0;
};

enum class Verdict { No, Marginal, Yes };
std::string_view verdict_name(Verdict v);

double verification_floor(double L, double eps, double n);
double accuracy_floor(double eps, double n);
FloorReport floor_report(const RateParams& p, double threshold_ratio = 1.25);

// Ceil with a relative guard so 50000.0000000001 from rounding stays 50000.
double ceil_count(double x);
double floor_count(double x);

double holdout_size(double L, double eps, double delta);

enum class SizingMode { Passive, Active };
double fairness_size(int K, double pi_min, double delta, double eps, double L, SizingMode mode);

CompositionalTax compositional_tax(const std::vector<double>& per_stage_L, double eps, double delta);

int max_verifiable_depth(double M_total, double delta, double eps, double L);

HorizonReport verification_horizon(double alpha, double c0, double M_total, double L,
                                   std::optional<double> model_size = std::nullopt);

int recalibration_trap(double gamma, double eps, double ece0, double M_total);

HalfLife verification_half_life(double delta, double lambda, double L, double eps);

TransferSize transfer_size(double L_h, double eps2, double delta_ft,
                           std::optional<double> baseline_L = std::nullopt,
                           std::optional<double> baseline_delta = std::nullopt);

double effective_samples_mixing(double m, double rho);

DynamicsFloor dynamics_floor(double L, double c0, double r, double beta, double t);

// gap < floor -> No; floor <= gap < ratio*floor -> Marginal; else Yes.
Verdict classify_gap(double gap, double floor, double threshold_ratio = 1.25);

}  // namespace vtax
