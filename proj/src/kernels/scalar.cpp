#include <algorithm>
#include <array>
#include <cmath>

#include "vtax/kernels.hpp"

namespace vtax::kernels::scalar {

void assign_bins(std::span<const double> conf, int bins, std::span<std::int32_t> out) {
    const double b = static_cast<double>(bins);
    const double top = b - 1.0;
    for (std::size_t k = 0; k < conf.size(); ++k) {
        const double p = conf[k];
        double i = std::ceil(p * b) - 1.0;
        i = std::min(std::max(i, 0.0), top);
        // p*B can land one ulp on the wrong side of an edge; settle against i/B.
        if (i > 0.0 && p <= i / b)
            i -= 1.0;
        else if (i < top && p > (i + 1.0) / b)
            i += 1.0;
        out[k] = static_cast<std::int32_t>(i);
    }
}

std::size_t bernoulli_threshold(std::span<const double> u, std::span<const double> q,
                                std::span<std::uint8_t> out) {
    std::size_t ones = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const std::uint8_t y = u[k] < q[k] ? 1 : 0;
        out[k] = y;
        ones += y;
    }
    return ones;
}

std::size_t clip_add(std::span<const double> p, std::span<const double> gap, std::span<double> out) {
    std::size_t clipped = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double s = p[k] + gap[k];
        if (s < 0.0) {
            out[k] = 0.0;
            ++clipped;
        } else if (s > 1.0) {
            out[k] = 1.0;
            ++clipped;
        } else {
            out[k] = s;
        }
    }
    return clipped;
}

double sum(std::span<const double> x) {
    std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < x.size(); ++k) acc[k & 3] += x[k];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

std::size_t count_nonzero(std::span<const std::uint8_t> x) {
    std::size_t n = 0;
    for (std::uint8_t v : x) n += v != 0;
    return n;
}

}  // namespace vtax::kernels::scalar
