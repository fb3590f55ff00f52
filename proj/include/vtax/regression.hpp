#pragma once

#include <span>

namespace vtax {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares of y on x; needs at least two distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Fit of log(y) on log(x). Non-positive y throws InvalidParam.
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> x);

}  // namespace vtax
