#include "vtax/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/parallel.hpp"
#include "vtax/rng.hpp"

namespace vtax {

BootstrapCI bootstrap_ci(const Dataset& data, const Statistic& statistic, int replicates, double level,
                         std::uint64_t seed) {
    if (data.empty()) throw EmptyDataset();
    if (!statistic) throw InvalidParam("statistic is empty");
    if (replicates < 2) throw InvalidParam("need at least two replicates");
    if (!(level > 0.0 && level < 1.0)) throw InvalidParam("level must be in (0,1)");

    BootstrapCI ci;
    ci.level = level;
    ci.replicates = replicates;
    ci.point = statistic(data);

    const std::size_t n = data.size();
    const auto R = static_cast<std::size_t>(replicates);
    std::vector<double> stats(R);
    std::vector<char> failed(R, 0);
    parallel_for(R, [&](std::size_t r) {
        Rng rng(seed, {r});
        std::vector<std::size_t> rows(n);
        for (auto& i : rows) i = static_cast<std::size_t>(rng.below(n));
        try {
            const double v = statistic(data.resample(rows));
            if (!std::isfinite(v)) failed[r] = 1;
            stats[r] = v;
        } catch (const std::exception&) {
            failed[r] = 1;
        }
    });
    for (std::size_t r = 0; r < R; ++r)
        if (failed[r]) throw StatisticFailure(r);

    ci.lo = quantile(stats, (1.0 - level) / 2.0);
    ci.hi = quantile(stats, (1.0 + level) / 2.0);
    return ci;
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidParam("spearman: length mismatch");
    if (x.size() < 2) throw InvalidParam("spearman: need at least two points");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

PermutationResult permutation_test(std::span<const double> x, std::span<const double> y, PermStatistic,
                                   int permutations, std::uint64_t seed) {
    if (x.size() != y.size()) throw InvalidParam("permutation test: length mismatch");
    if (x.size() < 3) throw InvalidParam("permutation test: need at least three pairs");
    if (permutations < 1) throw InvalidParam("permutations must be >= 1");

    // Canonical pair order first, so reordering the input pairs cannot change
    // which permutations get drawn.
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });
    std::vector<double> xs(x.size()), ys(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }
    // Ranks are invariant under permutation of y, so rank once.
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    PermutationResult out;
    out.permutations = permutations;
    out.stat = pearson(rx, ry);
    if (std::isnan(out.stat)) {
        out.p_value = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double obs = std::abs(out.stat);
    const auto P = static_cast<std::size_t>(permutations);
    std::vector<char> extreme(P, 0);
    parallel_for(P, [&](std::size_t k) {
        Rng rng(seed, {k});
        std::vector<double> perm = ry;
        for (std::size_t i = perm.size() - 1; i > 0; --i)
            std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
        // Tolerance keeps exact ties with the observed value counted.
        extreme[k] = std::abs(pearson(rx, perm)) >= obs - 1e-12;
    });
    const auto hits = static_cast<double>(std::count(extreme.begin(), extreme.end(), 1));
    out.p_value = (1.0 + hits) / (1.0 + permutations);
    return out;
}

}  // namespace vtax
