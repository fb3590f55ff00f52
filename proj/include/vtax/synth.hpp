#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vtax/core_types.hpp"
#include "vtax/rng.hpp"

namespace vtax {

// Confidence distribution of a synthetic world.
struct ScoreLaw {
    enum class Kind { BetaConcentrated, Uniform, PointMass };
    Kind kind = Kind::BetaConcentrated;
    double param = 0.15;  // eps for Beta((1-eps)/eps, 1); p0 for a point mass

    static ScoreLaw beta(double eps) { return {Kind::BetaConcentrated, eps}; }
    static ScoreLaw uniform() { return {Kind::Uniform, 0.0}; }
    static ScoreLaw point_mass(double p0) { return {Kind::PointMass, p0}; }

    void validate() const;
    // Inverse CDF; u in [0,1).
    double quantile(double u) const;
    double cdf(double p) const;
    double sample(Rng& rng) const { return quantile(rng.uniform()); }
    std::string describe() const;
};

enum class GapKind { Sinusoid, Constant, Custom };

struct SyntheticWorld {
    double amplitude = 0.05;
    int frequency = 3;
    double error_rate = 0.15;
    GapKind gap_kind = GapKind::Sinusoid;
    ScoreLaw score_law = ScoreLaw::beta(0.15);
    std::uint64_t seed = 0;
    // Used when gap_kind == Custom, together with custom_lipschitz.
    std::function<double(double)> custom_gap;
    double custom_lipschitz = 0.0;

    void validate() const;
    // Unclipped gap Delta(p).
    double gap(double p) const;
    // Bernoulli mean clip(p + Delta(p)).
    double accuracy_at(double p) const;
    // 2 pi k A for sinusoids, 0 for constants.
    double lipschitz() const;
};

// Convenience constructor for the standard sinusoid world.
SyntheticWorld sinusoid_world(double amplitude, int k, double eps, std::uint64_t seed = 0);

struct WorldSample {
    Dataset data;
    double clip_fraction = 0.0;
};

// m records from `world`; `stream` selects an independent replicate stream
// under the world's seed.
WorldSample sample_world(const SyntheticWorld& world, std::size_t m, std::uint64_t stream = 0);

// Column form used by the experiment loops; returns the clipped count.
std::size_t sample_world_columns(const SyntheticWorld& world, std::size_t m, Rng& rng,
                                 std::vector<double>& conf, std::vector<std::uint8_t>& correct);

// E|clip(p + Delta(p)) - p| under the score law, by midpoint quadrature in the
// law's quantile coordinate.
double true_ece(const SyntheticWorld& world, std::size_t nodes = 1'000'000);

// Probability that p + Delta(p) leaves [0,1], same quadrature.
double clip_probability(const SyntheticWorld& world, std::size_t nodes = 1'000'000);

// Stage warp x -> clip(x + a sin(2 pi f x + phase)) with Lipschitz constant
// 1 + 2 pi f a.
struct StageWarp {
    double lipschitz = 2.0;
    double frequency = 4.0;
    double phase = 0.0;

    double amplitude() const;
    double apply(double x) const;
};

struct PipelineWorld {
    std::vector<StageWarp> stages;
    ScoreLaw score_law = ScoreLaw::beta(0.15);

    // Default family: K warps of Lipschitz L, frequency 4, phase 0.7 k.
    static PipelineWorld uniform_stages(int K, double L, double eps);

    double accuracy_at(double p) const;
    double gap(double p) const { return accuracy_at(p) - p; }
    double stage_lipschitz_product() const;
    // Largest finite-difference slope of the composed gap on a fine grid.
    double empirical_lipschitz(std::size_t grid = 200'000) const;
    // The same world as a SyntheticWorld with a custom gap.
    SyntheticWorld as_world(std::uint64_t seed) const;
};

}  // namespace vtax
