#include "vtax/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vtax/error.hpp"
#include "vtax/kernels.hpp"

namespace vtax {

namespace {

// Confidence sums are accumulated in 2^-62 fixed point so that a bin's total
// does not depend on record order.
constexpr double kFixedScale = 0x1.0p62;
__extension__ using Fixed = __int128;

struct BinSums {
    std::size_t n = 0;
    std::size_t hits = 0;
    Fixed conf = 0;
};

std::int64_t to_fixed(double p) { return static_cast<std::int64_t>(p * kFixedScale + 0.5); }

double mean_from_fixed(Fixed total, std::size_t n) {
    return static_cast<double>(total) / kFixedScale / static_cast<double>(n);
}

void check_columns(std::span<const double> conf, std::span<const std::uint8_t> correct) {
    if (conf.empty()) throw EmptyDataset();
    if (conf.size() != correct.size()) throw InvalidParam("confidence and correct columns differ in length");
}

std::vector<BinStat> finish(const std::vector<BinSums>& sums, const std::vector<double>& edges) {
    std::vector<BinStat> out(sums.size());
    for (std::size_t b = 0; b < sums.size(); ++b) {
        BinStat& s = out[b];
        s.bin_index = static_cast<int>(b);
        s.lo = edges[b];
        s.hi = edges[b + 1];
        s.count = sums[b].n;
        if (s.count > 0) {
            s.mean_confidence = mean_from_fixed(sums[b].conf, s.count);
            s.accuracy = static_cast<double>(sums[b].hits) / static_cast<double>(s.count);
            s.gap = *s.accuracy - *s.mean_confidence;
        }
    }
    return out;
}

std::vector<BinStat> equal_width(std::span<const double> conf, std::span<const std::uint8_t> correct, int bins) {
    std::vector<std::int32_t> idx(conf.size());
    kernels::assign_bins(conf, bins, idx);
    std::vector<BinSums> sums(static_cast<std::size_t>(bins));
    for (std::size_t i = 0; i < conf.size(); ++i) {
        BinSums& s = sums[static_cast<std::size_t>(idx[i])];
        ++s.n;
        s.hits += correct[i];
        s.conf += to_fixed(conf[i]);
    }
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) edges[static_cast<std::size_t>(b)] = static_cast<double>(b) / bins;
    return finish(sums, edges);
}

std::vector<BinStat> equal_mass(std::span<const double> conf, std::span<const std::uint8_t> correct, int bins) {
    const std::size_t m = conf.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Sorting on (confidence, label) makes tied records interchangeable, so
    // the split of a tie across a bin boundary does not depend on input order.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (conf[a] != conf[b]) return conf[a] < conf[b];
        return correct[a] < correct[b];
    });

    const auto B = static_cast<std::size_t>(bins);
    std::vector<BinSums> sums(B);
    std::vector<std::size_t> start(B + 1);
    for (std::size_t b = 0; b <= B; ++b) start[b] = b * m / B;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t k = start[b]; k < start[b + 1]; ++k) {
            const std::size_t i = order[k];
            ++sums[b].n;
            sums[b].hits += correct[i];
            sums[b].conf += to_fixed(conf[i]);
        }
    }

    std::vector<double> edges(B + 1);
    edges[0] = 0.0;
    edges[B] = 1.0;
    for (std::size_t b = 1; b < B; ++b) {
        const std::size_t k = start[b];
        if (k == 0 || k >= m) {
            edges[b] = edges[b - 1];
        } else {
            edges[b] = 0.5 * (conf[order[k - 1]] + conf[order[k]]);
        }
    }
    return finish(sums, edges);
}

}  // namespace

std::string_view scheme_name(BinningScheme s) {
    return s == BinningScheme::EqualWidth ? "equal-width" : "equal-mass";
}

BinningScheme parse_scheme(std::string_view s) {
    if (s == "equal-width" || s == "width") return BinningScheme::EqualWidth;
    if (s == "equal-mass" || s == "mass") return BinningScheme::EqualMass;
    throw InvalidParam("unknown binning scheme: " + std::string(s));
}

int optimal_bin_count(double L, double m, double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidParam("eps must be in (0,1]");
    if (!(L > 0.0)) throw InvalidParam("L must be positive");
    if (!(m >= 1.0)) throw InvalidParam("m must be >= 1");
    const double b = std::cbrt(L * L * m / eps);
    // cbrt of a perfect cube can come back one ulp low; nudge before flooring.
    const double fl = std::floor(b * (1.0 + 1e-12));
    if (fl >= 1e9) throw InvalidParam("bin count overflows");
    return std::max(1, static_cast<int>(fl));
}

std::vector<BinStat> bin_statistics(std::span<const double> conf, std::span<const std::uint8_t> correct,
                                    int bins, BinningScheme scheme) {
    check_columns(conf, correct);
    if (bins < 1) throw InvalidParam("bins must be >= 1");
    return scheme == BinningScheme::EqualWidth ? equal_width(conf, correct, bins)
                                               : equal_mass(conf, correct, bins);
}

EceEstimate estimate_ece(std::span<const double> conf, std::span<const std::uint8_t> correct, int bins,
                         BinningScheme scheme) {
    EceEstimate e;
    e.bins = bins;
    e.scheme = scheme;
    e.bin_stats = bin_statistics(conf, correct, bins, scheme);
    const double m = static_cast<double>(conf.size());
    double value = 0.0;
    for (const BinStat& s : e.bin_stats) {
        if (s.count == 0) {
            ++e.empty_bins;
            continue;
        }
        value += (static_cast<double>(s.count) / m) * std::abs(*s.gap);
    }
    e.value = std::clamp(value, 0.0, 1.0);
    return e;
}

EceEstimate estimate_ece(const Dataset& data, int bins, BinningScheme scheme) {
    return estimate_ece(data.confidence(), data.correct(), bins, scheme);
}

double ece_value(std::span<const double> conf, std::span<const std::uint8_t> correct, int bins) {
    check_columns(conf, correct);
    if (bins < 1) throw InvalidParam("bins must be >= 1");
    std::vector<std::int32_t> idx(conf.size());
    kernels::assign_bins(conf, bins, idx);
    std::vector<double> diff(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < conf.size(); ++i)
        diff[static_cast<std::size_t>(idx[i])] += static_cast<double>(correct[i]) - conf[i];
    double total = 0.0;
    for (double d : diff) total += std::abs(d);
    return total / static_cast<double>(conf.size());
}

double error_rate(std::span<const std::uint8_t> correct) {
    if (correct.empty()) throw EmptyDataset();
    const auto hits = kernels::count_nonzero(correct);
    return static_cast<double>(correct.size() - hits) / static_cast<double>(correct.size());
}

double estimate_error_rate(const Dataset& data) { return error_rate(data.correct()); }

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidParam("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidParam("quantile level must be in [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

LipschitzEstimate estimate_lipschitz(std::span<const double> conf, std::span<const std::uint8_t> correct,
                                     int bins, std::size_t min_bin, double percentile, double cap) {
    if (bins < 2) throw InvalidParam("need at least two bins");
    if (!(cap > 0.0)) throw InvalidParam("cap must be positive");
    if (!(percentile >= 0.0 && percentile <= 1.0)) throw InvalidParam("percentile must be in [0,1]");
    const auto stats = bin_statistics(conf, correct, bins, BinningScheme::EqualWidth);

    std::vector<double> centre, gap;
    for (const BinStat& s : stats) {
        if (s.count < min_bin) continue;
        const double c = 0.5 * (s.lo + s.hi);
        centre.push_back(c);
        gap.push_back(*s.accuracy - c);
    }
    if (centre.size() < 2)
        throw InsufficientBins("fewer than two bins hold " + std::to_string(min_bin) + " samples");

    LipschitzEstimate est;
    est.percentile = percentile;
    est.cap = cap;
    for (std::size_t k = 1; k < centre.size(); ++k)
        est.slopes.push_back(std::abs(gap[k] - gap[k - 1]) / (centre[k] - centre[k - 1]));
    const double raw = quantile(est.slopes, percentile);
    est.capped = raw > cap;
    est.value = std::min(raw, cap);
    return est;
}

LipschitzEstimate estimate_lipschitz(const Dataset& data, int bins, std::size_t min_bin, double percentile,
                                     double cap) {
    return estimate_lipschitz(data.confidence(), data.correct(), bins, min_bin, percentile, cap);
}

}  // namespace vtax
