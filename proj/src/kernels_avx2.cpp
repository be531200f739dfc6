#include "kcm/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cmath>

#define KCM_AVX2 __attribute__((target("avx2,fma")))

namespace kcm::kernels {

namespace {

KCM_AVX2 inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

KCM_AVX2 void spmv_avx2(const Csr& a, const double* diag, const double* x, double* y) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::int64_t k = a.row_ptr[i];
        const std::int64_t end = a.row_ptr[i + 1];
        __m256d acc = _mm256_setzero_pd();
        for (; k + 4 <= end; k += 4) {
            const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.col + k));
            const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.val + k), xv, acc);
        }
        double s = hsum(acc);
        for (; k < end; ++k) s += a.val[k] * x[a.col[k]];
        y[i] = diag ? s + diag[i] * x[i] : s;
    }
}

KCM_AVX2 void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

KCM_AVX2 double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    }
    for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

KCM_AVX2 double l1_avx2(std::size_t n, const double* x, const double* y) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_and_pd(mask, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i))));
    double s = hsum(acc);
    for (; i < n; ++i) s += std::abs(x[i] - y[i]);
    return s;
}

KCM_AVX2 double max_abs_avx2(std::size_t n, const double* x) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_and_pd(mask, _mm256_loadu_pd(x + i)));
    alignas(32) double t[4];
    _mm256_store_pd(t, m);
    double r = std::max(std::max(t[0], t[1]), std::max(t[2], t[3]));
    for (; i < n; ++i) r = std::max(r, std::abs(x[i]));
    return r;
}

}  // namespace

const Table* avx2() {
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    static const Table t{"avx2", spmv_avx2, axpy_avx2, dot_avx2, l1_avx2, max_abs_avx2};
    return ok ? &t : nullptr;
}

}  // namespace kcm::kernels

#else

namespace kcm::kernels {
const Table* avx2() { return nullptr; }
}  // namespace kcm::kernels

#endif
