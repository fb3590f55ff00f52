#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "vtax/core_types.hpp"

namespace vtax {

struct BootstrapCI {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
    int replicates = 1000;
};

using Statistic = std::function<double(const Dataset&)>;

// Percentile interval from item-level resampling with replacement. A
// statistic that throws or returns a non-finite value raises
// StatisticFailure with the lowest failing replicate index.
BootstrapCI bootstrap_ci(const Dataset& data, const Statistic& statistic, int replicates = 1000,
                         double level = 0.95, std::uint64_t seed = 0);

// Ranks starting at 1, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> x);

// NaN when either input has no spread.
double spearman_rho(std::span<const double> x, std::span<const double> y);

enum class PermStatistic { SpearmanRho };

struct PermutationResult {
    double stat = 0.0;
    double p_value = 1.0;
    int permutations = 0;
};

// Two-sided, add-one smoothed: (1 + #{|perm| >= |obs|}) / (1 + permutations).
PermutationResult permutation_test(std::span<const double> x, std::span<const double> y,
                                   PermStatistic statistic = PermStatistic::SpearmanRho,
                                   int permutations = 10000, std::uint64_t seed = 0);

}  // namespace vtax
