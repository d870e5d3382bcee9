// NEON kernels for aarch64. Mirrors the scalar loop structure with
// float64x2_t lanes; gemm variants reuse the vectorized primitives.

#include "pinnse/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace pinnse::kern::neon {

void axpy(size_t n, double a, const double* x, double* y) {
    const float64x2_t va = vdupq_n_f64(a);
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot(size_t n, const double* x, const double* y) {
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum(size_t n, const double* x) {
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void add(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(size_t n, const double* a, const double* b, double* out) {
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vfmaq_f64(vld1q_f64(out + i), vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] += a[i] * b[i];
}

void scale(size_t n, double s, const double* x, double* out) {
    const float64x2_t vs = vdupq_n_f64(s);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vs, vld1q_f64(x + i)));
    for (; i < n; ++i) out[i] = s * x[i];
}

void gemm_nn(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    for (size_t i = 0; i < M; ++i) {
        double* c = C + i * N;
        if (!accumulate)
            for (size_t j = 0; j < N; ++j) c[j] = 0.0;
        const double* a = A + i * K;
        for (size_t k = 0; k < K; ++k) axpy(N, a[k], B + k * N, c);
    }
}

void gemm_nt(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    for (size_t i = 0; i < M; ++i) {
        const double* a = A + i * K;
        double* c = C + i * N;
        for (size_t j = 0; j < N; ++j) {
            double s = dot(K, a, B + j * K);
            c[j] = accumulate ? c[j] + s : s;
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
        for (size_t k = 0; k < K; ++k) axpy(N, a[k], b, C + k * N);
    }
}

extern const Ops kOps;
const Ops kOps = {axpy, dot, sum, add, sub, mul, mul_acc, scale, gemm_nn, gemm_nt, gemm_tn};

}  // namespace pinnse::kern::neon

#endif  // __aarch64__
