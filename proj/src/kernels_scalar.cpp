// Reference kernels. Plain loops, no explicit vectorization; these define the
// semantics the SIMD variants are tested against.

#include "pinnse/kernels.hpp"

namespace pinnse::kern::scalar {

void axpy(size_t n, double a, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum(size_t n, const double* x) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

void add(size_t n, const double* a, const double* b, double* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(size_t n, const double* a, const double* b, double* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(size_t n, const double* a, const double* b, double* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(size_t n, const double* a, const double* b, double* out) {
    for (size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void scale(size_t n, double s, const double* x, double* out) {
    for (size_t i = 0; i < n; ++i) out[i] = s * x[i];
}

// (i,k,j) loop order: the k-inner broadcast of A[i,k] over contiguous B rows.
void gemm_nn(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    for (size_t i = 0; i < M; ++i) {
        double* c = C + i * N;
        if (!accumulate)
            for (size_t j = 0; j < N; ++j) c[j] = 0.0;
        const double* a = A + i * K;
        for (size_t k = 0; k < K; ++k) {
            const double aik = a[k];
            const double* b = B + k * N;
            for (size_t j = 0; j < N; ++j) c[j] += aik * b[j];
        }
    }
}

void gemm_nt(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    for (size_t i = 0; i < M; ++i) {
        const double* a = A + i * K;
        double* c = C + i * N;
        for (size_t j = 0; j < N; ++j) {
            const double* b = B + j * K;
            double s = 0.0;
            for (size_t k = 0; k < K; ++k) s += a[k] * b[k];
            if (accumulate)
                c[j] += s;
            else
                c[j] = s;
        }
    }
}

void gemm_tn(size_t M, size_t N, size_t K, const double* A, const double* B,
             double* C, bool accumulate) {
    // C[K x N] (+)= sum_m A[m,k] * B[m,n]; rank-1 updates keep B rows contiguous.
    if (!accumulate)
        for (size_t i = 0; i < K * N; ++i) C[i] = 0.0;
    for (size_t m = 0; m < M; ++m) {
        const double* a = A + m * K;
        const double* b = B + m * N;
        for (size_t k = 0; k < K; ++k) {
            const double amk = a[k];
            double* c = C + k * N;
            for (size_t j = 0; j < N; ++j) c[j] += amk * b[j];
        }
    }
}

extern const Ops kOps;
const Ops kOps = {axpy, dot, sum, add, sub, mul, mul_acc, scale, gemm_nn, gemm_nt, gemm_tn};

}  // namespace pinnse::kern::scalar
