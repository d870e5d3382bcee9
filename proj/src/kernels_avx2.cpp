// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma on
// x86-64 only; callers go through the runtime dispatch table, which selects
// these only when the CPU reports AVX2 and FMA support.

#include "pinnse/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace pinnse::kern::avx2 {

static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void axpy(size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot(size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum(size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void add(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vo = _mm256_loadu_pd(out + i);
        vo = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), vo);
        _mm256_storeu_pd(out + i, vo);
    }
    for (; i < n; ++i) out[i] += a[i] * b[i];
}

void scale(size_t n, double s, const double* x, double* out) {
    const __m256d vs = _mm256_set1_pd(s);
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = s * x[i];
}

void gemm_nn(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    for (size_t i = 0; i < M; ++i) {
        double* c = C + i * N;
        if (!accumulate)
            for (size_t j = 0; j < N; ++j) c[j] = 0.0;
        const double* a = A + i * K;
        size_t k = 0;
        // two broadcast rows per pass amortizes the c loads/stores
        for (; k + 2 <= K; k += 2) {
            const __m256d a0 = _mm256_set1_pd(a[k]);
            const __m256d a1 = _mm256_set1_pd(a[k + 1]);
            const double* b0 = B + k * N;
            const double* b1 = B + (k + 1) * N;
            size_t j = 0;
            for (; j + 4 <= N; j += 4) {
                __m256d vc = _mm256_loadu_pd(c + j);
                vc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), vc);
                vc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), vc);
                _mm256_storeu_pd(c + j, vc);
            }
            for (; j < N; ++j) c[j] += a[k] * b0[j] + a[k + 1] * b1[j];
        }
        for (; k < K; ++k) {
            const __m256d a0 = _mm256_set1_pd(a[k]);
            const double* b0 = B + k * N;
            size_t j = 0;
            for (; j + 4 <= N; j += 4) {
                __m256d vc = _mm256_loadu_pd(c + j);
                vc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), vc);
                _mm256_storeu_pd(c + j, vc);
            }
            for (; j < N; ++j) c[j] += a[k] * b0[j];
        }
    }
}

void gemm_nt(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    for (size_t i = 0; i < M; ++i) {
        const double* a = A + i * K;
        double* c = C + i * N;
        for (size_t j = 0; j < N; ++j) {
            double s = dot(K, a, B + j * K);
            if (accumulate)
                c[j] += s;
            else
                c[j] = s;
        }
    }
}

void gemm_tn(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    if (!accumulate)
        for (size_t i = 0; i < K * N; ++i) C[i] = 0.0;
    for (size_t m = 0; m < M; ++m) {
        const double* a = A + m * K;
        const double* b = B + m * N;
        for (size_t k = 0; k < K; ++k) {
            const __m256d amk = _mm256_set1_pd(a[k]);
            double* c = C + k * N;
            size_t j = 0;
            for (; j + 4 <= N; j += 4) {
                __m256d vc = _mm256_loadu_pd(c + j);
                vc = _mm256_fmadd_pd(amk, _mm256_loadu_pd(b + j), vc);
                _mm256_storeu_pd(c + j, vc);
            }
            for (; j < N; ++j) c[j] += a[k] * b[j];
        }
    }
}

extern const Ops kOps;
const Ops kOps = {axpy, dot, sum, add, sub, mul, mul_acc, scale, gemm_nn, gemm_nt, gemm_tn};

}  // namespace pinnse::kern::avx2

#endif  // x86-64
