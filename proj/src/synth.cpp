#include "vtax/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vtax/error.hpp"
#include "vtax/kernels.hpp"

namespace vtax {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double clip01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Midpoint rule in the law's quantile coordinate.
template <class F>
double quadrature(const ScoreLaw& law, std::size_t nodes, F&& f) {
    if (law.kind == ScoreLaw::Kind::PointMass) return f(law.param);
    if (nodes == 0) throw InvalidParam("quadrature needs nodes");
    double total = 0.0;
    const double h = 1.0 / static_cast<double>(nodes);
    for (std::size_t i = 0; i < nodes; ++i) total += f(law.quantile((static_cast<double>(i) + 0.5) * h));
    return total * h;
}

}  // namespace

void ScoreLaw::validate() const {
    switch (kind) {
        case Kind::BetaConcentrated:
            if (!(param > 0.0 && param < 1.0)) throw InvalidParam("Beta score law needs eps in (0,1)");
            break;
        case Kind::PointMass:
            if (!(param >= 0.0 && param <= 1.0)) throw InvalidParam("point mass must be in [0,1]");
            break;
        case Kind::Uniform: break;
    }
}

double ScoreLaw::quantile(double u) const {
    switch (kind) {
        case Kind::BetaConcentrated: return std::pow(u, param / (1.0 - param));
        case Kind::Uniform: return u;
        case Kind::PointMass: return param;
    }
    return u;
}

double ScoreLaw::cdf(double p) const {
    p = clip01(p);
    switch (kind) {
        case Kind::BetaConcentrated: return std::pow(p, (1.0 - param) / param);
        case Kind::Uniform: return p;
        case Kind::PointMass: return p >= param ? 1.0 : 0.0;
    }
    return p;
}

std::string ScoreLaw::describe() const {
    std::ostringstream s;
    switch (kind) {
        case Kind::BetaConcentrated: s << "beta(eps=" << param << ")"; break;
        case Kind::Uniform: s << "uniform"; break;
        case Kind::PointMass: s << "point(" << param << ")"; break;
    }
    return s.str();
}

void SyntheticWorld::validate() const {
    score_law.validate();
    if (!(error_rate > 0.0 && error_rate <= 1.0)) throw InvalidParam("world eps must be in (0,1]");
    if (gap_kind == GapKind::Sinusoid && frequency < 1) throw InvalidParam("sinusoid frequency must be >= 1");
    if (gap_kind == GapKind::Custom && !custom_gap) throw InvalidParam("custom world needs a gap function");
    if (!std::isfinite(amplitude) || std::abs(amplitude) > 1.0) throw InvalidParam("amplitude must be in [-1,1]");
}

double SyntheticWorld::gap(double p) const {
    switch (gap_kind) {
        case GapKind::Sinusoid: return amplitude * std::sin(kTwoPi * frequency * p);
        case GapKind::Constant: return amplitude;
        case GapKind::Custom: return custom_gap(p);
    }
    return 0.0;
}

double SyntheticWorld::accuracy_at(double p) const { return clip01(p + gap(p)); }

double SyntheticWorld::lipschitz() const {
    switch (gap_kind) {
        case GapKind::Sinusoid: return kTwoPi * frequency * std::abs(amplitude);
        case GapKind::Constant: return 0.0;
        case GapKind::Custom: return custom_lipschitz;
    }
    return 0.0;
}

SyntheticWorld sinusoid_world(double amplitude, int k, double eps, std::uint64_t seed) {
    SyntheticWorld w;
    w.amplitude = amplitude;
    w.frequency = k;
    w.error_rate = eps;
    w.gap_kind = GapKind::Sinusoid;
    w.score_law = ScoreLaw::beta(eps);
    w.seed = seed;
    return w;
}

std::size_t sample_world_columns(const SyntheticWorld& world, std::size_t m, Rng& rng,
                                 std::vector<double>& conf, std::vector<std::uint8_t>& correct) {
    conf.resize(m);
    correct.resize(m);
    std::vector<double> gap(m), q(m), u(m);
    for (std::size_t i = 0; i < m; ++i) conf[i] = world.score_law.sample(rng);
    for (std::size_t i = 0; i < m; ++i) gap[i] = world.gap(conf[i]);
    const std::size_t clipped = kernels::clip_add(conf, gap, q);
    for (std::size_t i = 0; i < m; ++i) u[i] = rng.uniform();
    kernels::bernoulli_threshold(u, q, correct);
    return clipped;
}

WorldSample sample_world(const SyntheticWorld& world, std::size_t m, std::uint64_t stream) {
    world.validate();
    if (m == 0) throw InvalidParam("m must be >= 1");
    Rng rng(world.seed, {stream});
    std::vector<double> conf;
    std::vector<std::uint8_t> correct;
    const std::size_t clipped = sample_world_columns(world, m, rng, conf, correct);
    WorldSample s;
    s.clip_fraction = static_cast<double>(clipped) / static_cast<double>(m);
    s.data = Dataset::from_columns("synthetic", std::move(conf), std::move(correct));
    return s;
}

double true_ece(const SyntheticWorld& world, std::size_t nodes) {
    world.validate();
    return quadrature(world.score_law, nodes, [&](double p) { return std::abs(world.accuracy_at(p) - p); });
}

double clip_probability(const SyntheticWorld& world, std::size_t nodes) {
    world.validate();
    return quadrature(world.score_law, nodes, [&](double p) {
        const double s = p + world.gap(p);
        return (s < 0.0 || s > 1.0) ? 1.0 : 0.0;
    });
}

double StageWarp::amplitude() const { return (lipschitz - 1.0) / (kTwoPi * frequency); }

double StageWarp::apply(double x) const {
    return clip01(x + amplitude() * std::sin(kTwoPi * frequency * x + phase));
}

PipelineWorld PipelineWorld::uniform_stages(int K, double L, double eps) {
    if (K < 1) throw InvalidParam("pipeline depth must be >= 1");
    if (!(L >= 1.0)) throw InvalidParam("stage warps need L >= 1");
    PipelineWorld w;
    w.score_law = ScoreLaw::beta(eps);
    for (int k = 0; k < K; ++k) w.stages.push_back({L, 4.0, 0.7 * k});
    return w;
}

double PipelineWorld::accuracy_at(double p) const {
    double x = p;
    for (const auto& s : stages) x = s.apply(x);
    return x;
}

double PipelineWorld::stage_lipschitz_product() const {
    double prod = 1.0;
    for (const auto& s : stages) prod *= s.lipschitz;
    return prod;
}

double PipelineWorld::empirical_lipschitz(std::size_t grid) const {
    if (grid < 2) throw InvalidParam("grid too small");
    double best = 0.0;
    const double h = 1.0 / static_cast<double>(grid);
    double prev = gap(0.0);
    for (std::size_t i = 1; i <= grid; ++i) {
        const double g = gap(static_cast<double>(i) * h);
        best = std::max(best, std::abs(g - prev) / h);
        prev = g;
    }
    return best;
}

SyntheticWorld PipelineWorld::as_world(std::uint64_t seed) const {
    SyntheticWorld w;
    w.gap_kind = GapKind::Custom;
    w.amplitude = 0.0;
    w.score_law = score_law;
    w.error_rate = score_law.kind == ScoreLaw::Kind::BetaConcentrated ? score_law.param : 0.5;
    w.seed = seed;
    auto copy = *this;
    w.custom_gap = [copy](double p) { return copy.gap(p); };
    w.custom_lipschitz = empirical_lipschitz();
    return w;
}

}  // namespace vtax
