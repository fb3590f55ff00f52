#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference and, where
// the CPU supports it, an AVX2 variant picked once at startup. Variants are
// bitwise identical: reductions use the same four-lane interleaved order in
// both paths.
namespace vtax::kernels {

enum class Isa { Scalar, Avx2 };

Isa detected_isa();  // best the CPU supports
Isa active_isa();    // what the dispatchers currently call
void force_isa(Isa isa);  // tests; throws InvalidParam if unsupported
std::string_view isa_name(Isa isa);

// Equal-width bin of each confidence among B bins on [0,1]. Bin b covers
// (b/B, (b+1)/B]; bin 0 also takes 0. Interior edges go to the lower bin.
void assign_bins(std::span<const double> conf, int bins, std::span<std::int32_t> out);

// out[i] = u[i] < q[i]; returns the number of ones.
std::size_t bernoulli_threshold(std::span<const double> u, std::span<const double> q,
                                std::span<std::uint8_t> out);

// out[i] = clamp(p[i] + gap[i], 0, 1); returns how many were clamped.
std::size_t clip_add(std::span<const double> p, std::span<const double> gap, std::span<double> out);

double sum(std::span<const double> x);
std::size_t count_nonzero(std::span<const std::uint8_t> x);

// Scalar and AVX2 entry points, exposed for the equivalence tests.
namespace scalar {
void assign_bins(std::span<const double> conf, int bins, std::span<std::int32_t> out);
std::size_t bernoulli_threshold(std::span<const double> u, std::span<const double> q,
                                std::span<std::uint8_t> out);
std::size_t clip_add(std::span<const double> p, std::span<const double> gap, std::span<double> out);
double sum(std::span<const double> x);
std::size_t count_nonzero(std::span<const std::uint8_t> x);
}  // namespace scalar

namespace avx2 {
bool compiled();
void assign_bins(std::span<const double> conf, int bins, std::span<std::int32_t> out);
std::size_t bernoulli_threshold(std::span<const double> u, std::span<const double> q,
                                std::span<std::uint8_t> out);
std::size_t clip_add(std::span<const double> p, std::span<const double> gap, std::span<double> out);
double sum(std::span<const double> x);
std::size_t count_nonzero(std::span<const std::uint8_t> x);
}  // namespace avx2

}  // namespace vtax::kernels
