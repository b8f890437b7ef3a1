// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "tables.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace mre::kernels {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Cephes-style exp: x = n ln2 + r, Pade approximant for e^r, then scale by 2^n
// built directly in the exponent bits. Valid for x <= 709; below the smallest
// normal result the output is flushed to zero.
inline __m256d exp_pd(__m256d x) {
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d lo = _mm256_set1_pd(-708.3964185322641);
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000009e0);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);

    const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_max_pd(_mm256_min_pd(x, hi), lo);

    const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(fx, c1, x);
    x = _mm256_fnmadd_pd(fx, c2, x);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d px = _mm256_fmadd_pd(p0, xx, p1);
    px = _mm256_fmadd_pd(px, xx, p2);
    px = _mm256_mul_pd(px, x);
    __m256d qx = _mm256_fmadd_pd(q0, xx, q1);
    qx = _mm256_fmadd_pd(qx, xx, q2);
    qx = _mm256_fmadd_pd(qx, xx, q3);
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    r = _mm256_fmadd_pd(two, r, one);

    __m256i n = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(fx));
    n = _mm256_slli_epi64(_mm256_add_epi64(n, _mm256_set1_epi64x(1023)), 52);
    r = _mm256_mul_pd(r, _mm256_castsi256_pd(n));
    return _mm256_andnot_pd(under, r);
}

void affine_logits(const double* cols, std::size_t J, std::size_t k, const double* theta, const double* offset,
                   double* out) {
    const std::size_t J4 = J & ~std::size_t{3};
    for (std::size_t j = 0; j < J4; j += 4) {
        __m256d acc = _mm256_loadu_pd(offset + j);
        for (std::size_t c = 0; c < k; ++c) {
            acc = _mm256_fmadd_pd(_mm256_set1_pd(theta[c]), _mm256_loadu_pd(cols + c * J + j), acc);
        }
        _mm256_storeu_pd(out + j, acc);
    }
    for (std::size_t j = J4; j < J; ++j) {
        double acc = offset[j];
        for (std::size_t c = 0; c < k; ++c) acc = std::fma(theta[c], cols[c * J + j], acc);
        out[j] = acc;
    }
}

double max_value(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, vm);
        for (double v : lanes) m = v > m ? v : m;
    }
    for (; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double exp_shift_sum(double* x, std::size_t n, double shift) {
    const __m256d vs = _mm256_set1_pd(shift);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs));
        _mm256_storeu_pd(x + i, e);
        acc = _mm256_add_pd(acc, e);
    }
    double sum = hsum(acc);
    for (; i < n; ++i) {
        x[i] = std::exp(x[i] - shift);
        sum += x[i];
    }
    return sum;
}

void weighted_first(const double* cols, std::size_t J, std::size_t k, const double* w, double* out) {
    for (std::size_t c = 0; c < k; ++c) {
        const double* col = cols + c * J;
        __m256d acc = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j + 4 <= J; j += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), _mm256_loadu_pd(col + j), acc);
        double s = hsum(acc);
        for (; j < J; ++j) s += w[j] * col[j];
        out[c] = s;
    }
}

void weighted_centered_second(const double* cols, std::size_t J, std::size_t k, const double* w, const double* mean,
                              double* out) {
    for (std::size_t a = 0; a < k; ++a) {
        const double* ca = cols + a * J;
        const __m256d ma = _mm256_set1_pd(mean[a]);
        for (std::size_t b = a; b < k; ++b) {
            const double* cb = cols + b * J;
            const __m256d mb = _mm256_set1_pd(mean[b]);
            __m256d acc = _mm256_setzero_pd();
            std::size_t j = 0;
            for (; j + 4 <= J; j += 4) {
                const __m256d da = _mm256_sub_pd(_mm256_loadu_pd(ca + j), ma);
                const __m256d db = _mm256_sub_pd(_mm256_loadu_pd(cb + j), mb);
                acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + j), da), db, acc);
            }
            double s = hsum(acc);
            for (; j < J; ++j) s += w[j] * (ca[j] - mean[a]) * (cb[j] - mean[b]);
            out[a + b * k] = s;
            out[b + a * k] = s;
        }
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{affine_logits, max_value, exp_shift_sum, weighted_first, weighted_centered_second};
    return t;
}

}  // namespace mre::kernels
