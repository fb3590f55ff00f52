#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vtax/synth.hpp"

namespace vtax {

// p log(p/q) + (1-p) log((1-p)/(1-q)); +inf when q sits on a boundary that
// p does not. Throws InvalidParam outside [0,1].
double bernoulli_kl(double p, double q);

enum class LeCamBound { BretagnolleHuber, Pinsker, ExactLRT, QuadraticBH };
std::string_view bound_name(LeCamBound b);
LeCamBound parse_bound(std::string_view s);

struct LeCamConstant {
    double c1 = 0.0;
    double delta_star = 0.0;  // maximising separation
    double risk = 0.0;        // un-normalised two-point risk at delta_star
};

// Per-delta two-point lower bound on the risk of estimating the gap.
double lecam_risk(double eps, double delta, LeCamBound bound, int m);

// sqrt(m_ref/eps) * max over delta in (0, 0.999 eps] of lecam_risk.
LeCamConstant lecam_constant(double eps, LeCamBound bound, int m_ref = 1000);

// Total variation between Bin(m, p) and Bin(m, q).
double binomial_tv(int m, double p, double q);

struct TwoPointHypotheses {
    double p0 = 0.85;    // accuracy under P0, 1 - eps
    double delta = 0.0;  // P1 accuracy is p0 - delta
    long m = 1;

    void validate() const;
};

// Monte-Carlo power of the level-alpha randomised test on the error count,
// threshold calibrated on the same number of P0 draws.
double detection_power(const TwoPointHypotheses& hyp, double alpha, int trials, std::uint64_t seed);

// Exact power of the same randomised test from binomial tails.
double exact_detection_power(const TwoPointHypotheses& hyp, double alpha);

// Smallest m whose exact power reaches `power` at delta = eps.
long detection_sample_size(double eps, double alpha = 0.05, double power = 0.8);

// What a label-free auditor can see: a feature, the model's confidence, and a
// model-derived auxiliary signal (self-consistency vote fraction).
struct LabelFreeObservation {
    double feature = 0.0;
    double confidence = 0.0;
    double aux = 0.0;
};

using LabelFreeEstimator = std::function<double(std::span<const LabelFreeObservation>)>;

struct NamedEstimator {
    std::string name;
    LabelFreeEstimator fn;
};

// Label-free estimators used in the impossibility harness.
double mean_confidence_estimator(std::span<const LabelFreeObservation> obs);
double self_consistency_estimator(std::span<const LabelFreeObservation> obs);
double pseudo_label_ece_estimator(std::span<const LabelFreeObservation> obs);
std::vector<NamedEstimator> default_label_free_estimators();

struct HarnessConfig {
    double ece0 = 0.0;
    double ece1 = 0.5;
    std::size_t m = 1000;
    ScoreLaw score_law = ScoreLaw::beta(0.15);
    int votes = 8;
    std::uint64_t seed = 0;
};

struct HarnessResult {
    double out0 = 0.0;
    double out1 = 0.0;
    bool identical = false;          // bitwise equality of estimator outputs
    bool streams_identical = false;  // bitwise equality of observation streams
    double floor = 0.0;              // |ece1 - ece0| / 2
    double realized_ece0 = 0.0;      // E|eta_w(p) - p| over the stream
    double realized_ece1 = 0.0;
    double label_ece0 = 0.0;         // binned ECE against drawn labels
    double label_ece1 = 0.0;
    double clip_fraction1 = 0.0;
};

// World w has accuracy function eta_w(p) = clip(p - ece_w); the two worlds
// share every label-free observation and differ only in labels.
HarnessResult self_verification_harness(const HarnessConfig& cfg, const LabelFreeEstimator& estimator);

std::vector<LabelFreeObservation> label_free_stream(const HarnessConfig& cfg);

}  // namespace vtax
