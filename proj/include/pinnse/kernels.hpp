#pragma once

#include <cstddef>
#include <string>

namespace pinnse::kern {

/// Kernel variant selected at runtime. All variants compute the same
/// quantities with the same loop structure; vector variants may fuse
/// multiply-add, so results can differ from scalar in the last bits.
/// Equivalence between variants is covered by tests/test_kernels.cpp.
enum class Variant : int { scalar = 0, avx2 = 1, neon = 2 };

const char* variant_name(Variant v);
bool variant_available(Variant v);

/// Currently active variant. Chosen once at startup: best available, unless
/// the PINNSE_KERNELS environment variable names one of scalar|avx2|neon.
Variant active_variant();

/// Force a variant (tests). Throws ConfigError if unavailable on this CPU.
void force_variant(Variant v);

struct Ops {
    // y[i] += a * x[i]
    void (*axpy)(size_t n, double a, const double* x, double* y);
    // sum_i x[i] * y[i]
    double (*dot)(size_t n, const double* x, const double* y);
    double (*sum)(size_t n, const double* x);
    void (*add)(size_t n, const double* a, const double* b, double* out);
    void (*sub)(size_t n, const double* a, const double* b, double* out);
    void (*mul)(size_t n, const double* a, const double* b, double* out);
    // out[i] += a[i] * b[i]
    void (*mul_acc)(size_t n, const double* a, const double* b, double* out);
    // out[i] = s * x[i]
    void (*scale)(size_t n, double s, const double* x, double* out);
    // C[M x N] (+)= A[M x K] * B[K x N]; row-major, no aliasing
    void (*gemm_nn)(size_t M, size_t N, size_t K, const double* A,
                    const double* B, double* C, bool accumulate);
    // C[M x N] (+)= A[M x K] * B'[K x N] with B stored [N x K]
    void (*gemm_nt)(size_t M, size_t N, size_t K, const double* A,
                    const double* B, double* C, bool accumulate);
    // C[K x N] (+)= A'[K x M] * B[M x N] with A stored [M x K]
    void (*gemm_tn)(size_t M, size_t N, size_t K, const double* A,
                    const double* B, double* C, bool accumulate);
};

const Ops& ops();
const Ops& ops_for(Variant v);  // tests

// Convenience forwarders through the active variant.
inline void axpy(size_t n, double a, const double* x, double* y) { ops().axpy(n, a, x, y); }
inline double dot(size_t n, const double* x, const double* y) { return ops().dot(n, x, y); }
inline double sum(size_t n, const double* x) { return ops().sum(n, x); }
inline void add(size_t n, const double* a, const double* b, double* o) { ops().add(n, a, b, o); }
inline void sub(size_t n, const double* a, const double* b, double* o) { ops().sub(n, a, b, o); }
inline void mul(size_t n, const double* a, const double* b, double* o) { ops().mul(n, a, b, o); }
inline void mul_acc(size_t n, const double* a, const double* b, double* o) { ops().mul_acc(n, a, b, o); }
inline void scale(size_t n, double s, const double* x, double* o) { ops().scale(n, s, x, o); }
inline void gemm_nn(size_t M, size_t N, size_t K, const double* A, const double* B, double* C,
                    bool acc) { ops().gemm_nn(M, N, K, A, B, C, acc); }
inline void gemm_nt(size_t M, size_t N, size_t K, const double* A, const double* B, double* C,
                    bool acc) { ops().gemm_nt(M, N, K, A, B, C, acc); }
inline void gemm_tn(size_t M, size_t N, size_t K, const double* A, const double* B, double* C,
                    bool acc) { ops().gemm_tn(M, N, K, A, B, C, acc); }

}  // namespace pinnse::kern
