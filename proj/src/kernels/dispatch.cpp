#include <atomic>

#include "vtax/error.hpp"
#include "vtax/kernels.hpp"

namespace vtax::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return avx2::compiled() && __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detected_isa()};
    return isa;
}

bool use_avx2() { return current().load(std::memory_order_relaxed) == Isa::Avx2; }

}  // namespace

Isa detected_isa() {
    static const Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    return isa;
}

Isa active_isa() { return current().load(); }

void force_isa(Isa isa) {
    if (isa == Isa::Avx2 && !cpu_has_avx2()) throw InvalidParam("AVX2 not available on this CPU");
    current().store(isa);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void assign_bins(std::span<const double> conf, int bins, std::span<std::int32_t> out) {
    if (bins < 1) throw InvalidParam("bins must be >= 1");
    if (out.size() < conf.size()) throw InvalidParam("output span too small");
    use_avx2() ? avx2::assign_bins(conf, bins, out) : scalar::assign_bins(conf, bins, out);
}

std::size_t bernoulli_threshold(std::span<const double> u, std::span<const double> q,
                                std::span<std::uint8_t> out) {
    if (q.size() < u.size() || out.size() < u.size()) throw InvalidParam("span size mismatch");
    return use_avx2() ? avx2::bernoulli_threshold(u, q, out) : scalar::bernoulli_threshold(u, q, out);
}

std::size_t clip_add(std::span<const double> p, std::span<const double> gap, std::span<double> out) {
    if (gap.size() < p.size() || out.size() < p.size()) throw InvalidParam("span size mismatch");
    return use_avx2() ? avx2::clip_add(p, gap, out) : scalar::clip_add(p, gap, out);
}

double sum(std::span<const double> x) { return use_avx2() ? avx2::sum(x) : scalar::sum(x); }

std::size_t count_nonzero(std::span<const std::uint8_t> x) {
    return use_avx2() ? avx2::count_nonzero(x) : scalar::count_nonzero(x);
}

}  // namespace vtax::kernels
