#pragma once

#include <cmath>
#include <vector>

#include "pinnse/common.hpp"
#include "pinnse/rng.hpp"
#include "pinnse/tape.hpp"
#include "pinnse/tensor.hpp"

namespace pinnse::nn {

/// Feed-forward network: widths = [in, hidden..., out], one weight matrix per
/// consecutive pair. With final_linear the last layer has no activation.
struct MlpSpec {
    std::vector<int> widths;
    ActivationKind act = ActivationKind::gelu;
    bool final_linear = true;
    double act_const = 3.14;  // the source formulas use 3.14, not pi

    int n_layers() const { return int(widths.size()) - 1; }
    int in_dim() const { return widths.front(); }
    int out_dim() const { return widths.back(); }

    void validate() const {
        PINNSE_CHECK(widths.size() >= 2, "mlp: need at least one layer");
        for (int w : widths) PINNSE_CHECK(w > 0, "mlp: widths must be positive");
    }
};

/// widths = [in, width x layers-1, out]; `layers` counts weight matrices.
inline MlpSpec mlp_spec(int in, int width, int layers, int out, ActivationKind act,
                        double act_const = 3.14) {
    PINNSE_CHECK(layers >= 1, "mlp: need at least one layer");
    MlpSpec s;
    s.widths.push_back(in);
    for (int i = 0; i < layers - 1; ++i) s.widths.push_back(width);
    s.widths.push_back(out);
    s.act = act;
    s.act_const = act_const;
    return s;
}

struct WeightSet {
    std::vector<Tensor> W;  // [fan_in, fan_out] each
    std::vector<Tensor> b;  // [fan_out] each
};

/// Uniform Glorot initialization, zero biases. Reproducible for a fixed seed.
inline WeightSet mlp_init(const MlpSpec& spec, uint64_t seed) {
    spec.validate();
    WeightSet ws;
    Rng rng(seed);
    for (int l = 0; l + 1 < int(spec.widths.size()); ++l) {
        const int fi = spec.widths[size_t(l)];
        const int fo = spec.widths[size_t(l) + 1];
        const double bound = std::sqrt(6.0 / double(fi + fo));
        Tensor W(Shape{fi, fo});
        for (int64_t i = 0; i < W.numel(); ++i) W[i] = rng.uniform(-bound, bound);
        ws.W.push_back(std::move(W));
        ws.b.push_back(Tensor::zeros({fo}));
    }
    return ws;
}

/// Layer parameters already registered on a tape.
struct MlpVars {
    std::vector<ad::Var> W, b;
};

inline ad::Var mlp_eval(ad::Tape& t, const MlpSpec& spec, const MlpVars& vars, ad::Var x) {
    const int L = spec.n_layers();
    PINNSE_CHECK(int(vars.W.size()) == L, "mlp_eval: layer count mismatch");
    for (int l = 0; l < L; ++l) {
        x = t.linear(x, vars.W[size_t(l)], vars.b[size_t(l)]);
        if (l + 1 < L || !spec.final_linear) x = t.activation(x, spec.act, spec.act_const);
    }
    return x;
}

/// Plain (tape-free) evaluation for tests and tools. x is [rows, in].
inline Tensor mlp_eval_plain(const MlpSpec& spec, const WeightSet& ws, const Tensor& x) {
    ad::Tape t;
    MlpVars vars;
    for (size_t l = 0; l < ws.W.size(); ++l) {
        vars.W.push_back(t.leaf(ws.W[l]));
        vars.b.push_back(t.leaf(ws.b[l]));
    }
    ad::Var out = mlp_eval(t, spec, vars, t.leaf(x));
    return t.value(out);
}

}  // namespace pinnse::nn
