#pragma once

#include <cmath>

#include "pinnse/rng.hpp"
#include "pinnse/tensor.hpp"

namespace pinnse::nn {

/// Random Fourier Feature projection of query-point coordinates. The
/// frequency matrix is drawn once from the seed and then fixed; it is stored
/// in checkpoints alongside the weights.
struct RffSpec {
    int input_dim = 2;
    int n_freq = 32;
    double sigma = 1.0;  // frequency scale over normalized inputs
    uint64_t seed = 0;

    int out_dim() const { return 2 * n_freq; }
};

inline Tensor rff_matrix(const RffSpec& spec) {
    Tensor B(Shape{spec.input_dim, spec.n_freq});
    Rng rng(spec.seed ^ 0x5eedf00dULL);
    for (int64_t i = 0; i < B.numel(); ++i) B[i] = spec.sigma * rng.gaussian();
    return B;
}

/// qp is [N, d]; returns [N, 2m] = [cos(qp B), sin(qp B)].
inline Tensor rff_encode(const RffSpec& spec, const Tensor& B, const Tensor& qp) {
    PINNSE_CHECK(qp.rank() == 2 && qp.dim(1) == spec.input_dim,
                 "rff_encode: query dim does not match spec");
    const int64_t N = qp.dim(0), d = qp.dim(1), m = spec.n_freq;
    Tensor out(Shape{N, 2 * m});
    for (int64_t r = 0; r < N; ++r) {
        for (int64_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int64_t k = 0; k < d; ++k) acc += qp.at2(r, k) * B.at2(k, j);
            out.at2(r, j) = std::cos(acc);
            out.at2(r, m + j) = std::sin(acc);
        }
    }
    return out;
}

inline Tensor rff_encode(const RffSpec& spec, const Tensor& qp) {
    return rff_encode(spec, rff_matrix(spec), qp);
}

}  // namespace pinnse::nn
