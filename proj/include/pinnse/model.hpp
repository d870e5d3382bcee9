#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pinnse/mlp.hpp"
#include "pinnse/rff.hpp"
#include "pinnse/tape.hpp"
#include "pinnse/tensor.hpp"

namespace pinnse::nn {

/// normalized = (x - offset) / scale ; physical = v * scale + offset
struct AffineScale {
    double offset = 0.0;
    double scale = 1.0;
};

/// Variable-length sequence of sensor snapshots. First column of `rows` is
/// time in seconds; statics (thickness, BC descriptors) are appended to every
/// row when the window enters the encoder.
struct SensorWindow {
    Tensor rows;                   // [N, 1 + n_channels]
    std::vector<double> statics;   // appended columns

    int64_t n_rows() const { return rows.dim(0); }
    int64_t arity() const { return rows.dim(1) + int64_t(statics.size()); }
    void validate() const;
};

enum class HeadCombine : uint8_t { sum, concat };

/// Everything needed to rebuild the PINN-SE model: the per-snapshot encoder,
/// pooling, post-pooling, query-point path, PINN head(s) and identification
/// head, plus the normalization recorded next to the weights.
struct BundleSpec {
    std::string app;  // rossler | ns | heat
    MlpSpec encoder;
    PoolKind pooling = PoolKind::mean_square;
    std::optional<MlpSpec> post_pool;
    std::optional<MlpSpec> qp_encoder;
    std::optional<RffSpec> rff;
    std::vector<MlpSpec> heads;
    HeadCombine combine = HeadCombine::sum;
    std::optional<MlpSpec> ident;
    /// The identification head reads the pooled encoder output (F_DS)
    /// instead of the post-pooling feature handed to the PINN.
    bool ident_on_encoder_output = false;
    std::vector<AffineScale> window_scale;  // per encoder input column
    std::vector<AffineScale> qp_scale;      // per query coordinate
    std::vector<AffineScale> out_scale;     // per predicted field
    std::vector<AffineScale> ident_scale;   // per identified parameter

    int window_arity() const { return encoder.in_dim(); }
    int n_qp() const { return int(qp_scale.size()); }
    int n_out() const;
    int n_params() const { return ident ? ident->out_dim() : 0; }
    int feature_dim() const { return post_pool ? post_pool->out_dim() : encoder.out_dim(); }
    void validate() const;
};

struct ModelBundle {
    BundleSpec spec;
    std::vector<std::string> names;   // parameter names, fixed order
    std::vector<std::string> blocks;  // block id per parameter (freeze gating)
    std::vector<Tensor> values;
    std::vector<bool> trainable;

    int64_t n_scalars() const {
        int64_t n = 0;
        for (const auto& t : values) n += t.numel();
        return n;
    }
    const Tensor& tensor(const std::string& name) const;
    Tensor& tensor(const std::string& name);
};

ModelBundle make_bundle(BundleSpec spec, uint64_t seed);

/// Zero-padded batch of windows plus the validity mask.
struct WindowBatch {
    Tensor rows;               // [b, N_max, arity] (raw, un-normalized)
    std::vector<double> mask;  // b * N_max, 1 for valid rows
    int64_t batch() const { return rows.dim(0); }
};

WindowBatch pack_windows(const std::vector<SensorWindow>& windows);

/// Model re-built on a tape: parameter leaves in store order plus the
/// encoder output.
struct TapeModel {
    std::vector<ad::Var> params;
    ad::Var fds;   // [b, 1, d]  pooled encoder output
    ad::Var fvec;  // [b, 1, n_f] feature vector after post-pooling
    // registered per-block views of `params`
    MlpVars encoder, post_pool, qp_encoder, ident;
    std::vector<MlpVars> heads;
    ad::Var rff_B;
};

/// Registers all parameters and runs the encoder side (per-row MLP, pooling,
/// post-pooling). Window rows are normalized with the bundle's window_scale.
TapeModel begin_model(ad::Tape& tape, const ModelBundle& bundle, const WindowBatch& batch);

/// Query-point leaf. qps is [b, N_qp, n_qp] in physical coordinates;
/// normalization scales fold into the values and, when seeded, into the
/// tangent magnitudes so jet planes carry physical derivatives.
ad::Var make_qp_leaf(ad::Tape& tape, const ModelBundle& bundle, const Tensor& qps,
                     bool with_seeds);

/// Fields at query points: concatenation of encoded query path and repeated
/// feature vector through the PINN head(s). Output is [b, N_qp, n_out] in
/// physical units.
ad::Var predict_fields_tape(ad::Tape& tape, const ModelBundle& bundle, const TapeModel& model,
                            ad::Var qp_leaf);

/// Identified parameters, [b, n_params].
ad::Var predict_params_tape(ad::Tape& tape, const ModelBundle& bundle, const TapeModel& model);

// ---- tape-free conveniences (inference only) ----

Tensor encode(const ModelBundle& bundle, const SensorWindow& window);
Tensor predict_fields(const ModelBundle& bundle, const std::vector<SensorWindow>& windows,
                      const Tensor& qps);
Tensor predict_params(const ModelBundle& bundle, const std::vector<SensorWindow>& windows);
/// d^order(field)/d(coord)^order at the query points, physical units.
Tensor predict_field_derivative(const ModelBundle& bundle,
                                const std::vector<SensorWindow>& windows, const Tensor& qps,
                                int coord, int order);

/// Jet layout the apps train with (which query coordinates carry which
/// derivative orders).
ad::JetLayout app_layout(const std::string& app);

}  // namespace pinnse::nn
