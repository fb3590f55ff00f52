#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vtax/core_types.hpp"

namespace vtax {

enum class BinningScheme { EqualWidth, EqualMass };

std::string_view scheme_name(BinningScheme s);
BinningScheme parse_scheme(std::string_view s);

struct EceEstimate {
    double value = 0.0;
    int bins = 1;
    std::vector<BinStat> bin_stats;
    BinningScheme scheme = BinningScheme::EqualWidth;
    std::size_t empty_bins = 0;
};

struct LipschitzEstimate {
    double value = 0.0;
    double percentile = 0.75;
    double cap = 5.0;
    std::vector<double> slopes;
    bool capped = false;
};

// max(1, floor((L^2 m / eps)^{1/3})).
int optimal_bin_count(double L, double m, double eps);

std::vector<BinStat> bin_statistics(std::span<const double> conf, std::span<const std::uint8_t> correct,
                                    int bins, BinningScheme scheme = BinningScheme::EqualWidth);

EceEstimate estimate_ece(const Dataset& data, int bins, BinningScheme scheme = BinningScheme::EqualWidth);
EceEstimate estimate_ece(std::span<const double> conf, std::span<const std::uint8_t> correct, int bins,
                         BinningScheme scheme = BinningScheme::EqualWidth);

// Equal-width value only, no per-bin report; for Monte-Carlo inner loops.
double ece_value(std::span<const double> conf, std::span<const std::uint8_t> correct, int bins);

double estimate_error_rate(const Dataset& data);
double error_rate(std::span<const std::uint8_t> correct);

LipschitzEstimate estimate_lipschitz(const Dataset& data, int bins = 20, std::size_t min_bin = 30,
                                     double percentile = 0.75, double cap = 5.0);
LipschitzEstimate estimate_lipschitz(std::span<const double> conf, std::span<const std::uint8_t> correct,
                                     int bins = 20, std::size_t min_bin = 30, double percentile = 0.75,
                                     double cap = 5.0);

// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double q);

}  // namespace vtax
