#include "vtax/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define VTAX_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

namespace vtax::kernels::avx2 {

#ifdef VTAX_HAVE_AVX2_KERNELS

// The target attribute is confined to these pointer-based helpers so no
// inline library code gets instantiated with AVX2 enabled.
namespace {

__attribute__((target("avx2"))) void assign_bins_impl(const double* conf, std::size_t n, int bins,
                                                      std::int32_t* out) {
    const double bd = static_cast<double>(bins);
    const __m256d b = _mm256_set1_pd(bd);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d top = _mm256_set1_pd(bd - 1.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d p = _mm256_loadu_pd(conf + k);
        __m256d i = _mm256_sub_pd(_mm256_ceil_pd(_mm256_mul_pd(p, b)), one);
        i = _mm256_min_pd(_mm256_max_pd(i, zero), top);
        const __m256d lo = _mm256_div_pd(i, b);
        const __m256d hi = _mm256_div_pd(_mm256_add_pd(i, one), b);
        const __m256d dec = _mm256_and_pd(_mm256_cmp_pd(i, zero, _CMP_GT_OQ),
                                          _mm256_cmp_pd(p, lo, _CMP_LE_OQ));
        const __m256d inc = _mm256_andnot_pd(
            dec, _mm256_and_pd(_mm256_cmp_pd(i, top, _CMP_LT_OQ), _mm256_cmp_pd(p, hi, _CMP_GT_OQ)));
        i = _mm256_sub_pd(i, _mm256_and_pd(dec, one));
        i = _mm256_add_pd(i, _mm256_and_pd(inc, one));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out + k), _mm256_cvtpd_epi32(i));
    }
    if (k < n) scalar::assign_bins({conf + k, n - k}, bins, {out + k, n - k});
}

__attribute__((target("avx2"))) std::size_t bernoulli_impl(const double* u, const double* q,
                                                           std::size_t n, std::uint8_t* out) {
    std::size_t ones = 0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d lt = _mm256_cmp_pd(_mm256_loadu_pd(u + k), _mm256_loadu_pd(q + k), _CMP_LT_OQ);
        const int mask = _mm256_movemask_pd(lt);
        out[k] = mask & 1;
        out[k + 1] = (mask >> 1) & 1;
        out[k + 2] = (mask >> 2) & 1;
        out[k + 3] = (mask >> 3) & 1;
        ones += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
    }
    if (k < n) ones += scalar::bernoulli_threshold({u + k, n - k}, {q + k, n - k}, {out + k, n - k});
    return ones;
}

__attribute__((target("avx2"))) std::size_t clip_add_impl(const double* p, const double* g,
                                                          std::size_t n, double* out) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t clipped = 0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d s = _mm256_add_pd(_mm256_loadu_pd(p + k), _mm256_loadu_pd(g + k));
        const __m256d outside =
            _mm256_or_pd(_mm256_cmp_pd(s, zero, _CMP_LT_OQ), _mm256_cmp_pd(s, one, _CMP_GT_OQ));
        clipped += static_cast<std::size_t>(
            __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(outside))));
        _mm256_storeu_pd(out + k, _mm256_min_pd(_mm256_max_pd(s, zero), one));
    }
    if (k < n) clipped += scalar::clip_add({p + k, n - k}, {g + k, n - k}, {out + k, n - k});
    return clipped;
}

__attribute__((target("avx2"))) double sum_impl(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + k));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    // Tail continues the same lane assignment as the scalar reference.
    for (; k < n; ++k) lane[k & 3] += x[k];
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

__attribute__((target("avx2"))) std::size_t count_impl(const std::uint8_t* x, std::size_t n) {
    std::size_t total = 0;
    std::size_t k = 0;
    const __m256i zero = _mm256_setzero_si256();
    for (; k + 32 <= n; k += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + k));
        const unsigned zeros =
            static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
        total += 32 - static_cast<std::size_t>(__builtin_popcount(zeros));
    }
    for (; k < n; ++k) total += x[k] != 0;
    return total;
}

}  // namespace

bool compiled() { return true; }

void assign_bins(std::span<const double> conf, int bins, std::span<std::int32_t> out) {
    assign_bins_impl(conf.data(), conf.size(), bins, out.data());
}

std::size_t bernoulli_threshold(std::span<const double> u, std::span<const double> q,
                                std::span<std::uint8_t> out) {
    return bernoulli_impl(u.data(), q.data(), u.size(), out.data());
}

std::size_t clip_add(std::span<const double> p, std::span<const double> gap, std::span<double> out) {
    return clip_add_impl(p.data(), gap.data(), p.size(), out.data());
}

double sum(std::span<const double> x) { return sum_impl(x.data(), x.size()); }

std::size_t count_nonzero(std::span<const std::uint8_t> x) { return count_impl(x.data(), x.size()); }

#else

bool compiled() { return false; }
void assign_bins(std::span<const double> c, int b, std::span<std::int32_t> o) { scalar::assign_bins(c, b, o); }
std::size_t bernoulli_threshold(std::span<const double> u, std::span<const double> q,
                                std::span<std::uint8_t> o) {
    return scalar::bernoulli_threshold(u, q, o);
}
std::size_t clip_add(std::span<const double> p, std::span<const double> g, std::span<double> o) {
    return scalar::clip_add(p, g, o);
}
double sum(std::span<const double> x) { return scalar::sum(x); }
std::size_t count_nonzero(std::span<const std::uint8_t> x) { return scalar::count_nonzero(x); }

#endif

}  // namespace vtax::kernels::avx2
