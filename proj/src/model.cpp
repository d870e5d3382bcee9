#include "pinnse/model.hpp"

#include <algorithm>

namespace pinnse::nn {

void SensorWindow::validate() const {
    PINNSE_CHECK(rows.rank() == 2 && rows.dim(0) >= 1, "window: need at least one row");
    for (int64_t r = 1; r < rows.dim(0); ++r)
        PINNSE_CHECK(rows.at2(r, 0) > rows.at2(r - 1, 0), "window: time must strictly increase");
}

int BundleSpec::n_out() const {
    PINNSE_CHECK(!heads.empty(), "bundle: no PINN heads");
    if (combine == HeadCombine::sum) return heads[0].out_dim();
    int n = 0;
    for (const auto& h : heads) n += h.out_dim();
    return n;
}

void BundleSpec::validate() const {
    encoder.validate();
    PINNSE_CHECK(!heads.empty(), "bundle: at least one PINN head required");
    const int nf = feature_dim();
    int qp_feat = n_qp();
    if (rff) {
        PINNSE_CHECK(rff->input_dim == n_qp(), "bundle: rff input dim mismatch");
        qp_feat = rff->out_dim();
    }
    if (qp_encoder) {
        PINNSE_CHECK(qp_encoder->in_dim() == qp_feat, "bundle: qp encoder input dim mismatch");
        qp_feat = qp_encoder->out_dim();
    }
    for (const auto& h : heads) {
        h.validate();
        PINNSE_CHECK(h.in_dim() == qp_feat + nf,
                     "bundle: head input dim must equal qp features + feature vector");
        if (combine == HeadCombine::sum)
            PINNSE_CHECK(h.out_dim() == heads[0].out_dim(), "bundle: summed heads must agree");
    }
    if (post_pool)
        PINNSE_CHECK(post_pool->in_dim() == encoder.out_dim(), "bundle: post_pool input dim");
    if (ident) {
        const int want = ident_on_encoder_output ? encoder.out_dim() : nf;
        PINNSE_CHECK(ident->in_dim() == want, "bundle: ident input dim");
    }
    PINNSE_CHECK(int(window_scale.size()) == window_arity(), "bundle: window_scale size");
    PINNSE_CHECK(int(out_scale.size()) == n_out(), "bundle: out_scale size");
    if (ident)
        PINNSE_CHECK(int(ident_scale.size()) == ident->out_dim(), "bundle: ident_scale size");
}

const Tensor& ModelBundle::tensor(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw ConfigError("bundle: no parameter named " + name);
}

Tensor& ModelBundle::tensor(const std::string& name) {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw ConfigError("bundle: no parameter named " + name);
}

namespace {

void push_mlp(ModelBundle& b, const std::string& block, const MlpSpec& spec, uint64_t seed) {
    WeightSet ws = mlp_init(spec, seed);
    for (size_t l = 0; l < ws.W.size(); ++l) {
        b.names.push_back(block + ".W" + std::to_string(l));
        b.blocks.push_back(block);
        b.values.push_back(std::move(ws.W[l]));
        b.trainable.push_back(true);
        b.names.push_back(block + ".b" + std::to_string(l));
        b.blocks.push_back(block);
        b.values.push_back(std::move(ws.b[l]));
        b.trainable.push_back(true);
    }
}

// Parameter registration must match push_mlp order exactly.
void register_params(ad::Tape& t, const ModelBundle& b, TapeModel& m) {
    size_t i = 0;
    auto take_mlp = [&](const MlpSpec& spec, MlpVars& vars) {
        for (int l = 0; l < spec.n_layers(); ++l) {
            ad::Var W = t.leaf(b.values[i], b.trainable[i]);
            m.params.push_back(W);
            ++i;
            ad::Var bias = t.leaf(b.values[i], b.trainable[i]);
            m.params.push_back(bias);
            ++i;
            vars.W.push_back(W);
            vars.b.push_back(bias);
        }
    };
    take_mlp(b.spec.encoder, m.encoder);
    if (b.spec.post_pool) take_mlp(*b.spec.post_pool, m.post_pool);
    if (b.spec.rff) {
        m.rff_B = t.leaf(b.values[i], false);
        m.params.push_back(m.rff_B);
        ++i;
    }
    if (b.spec.qp_encoder) take_mlp(*b.spec.qp_encoder, m.qp_encoder);
    m.heads.resize(b.spec.heads.size());
    for (size_t h = 0; h < b.spec.heads.size(); ++h) take_mlp(b.spec.heads[h], m.heads[h]);
    if (b.spec.ident) take_mlp(*b.spec.ident, m.ident);
    PINNSE_CHECK(i == b.values.size(), "bundle: parameter registration out of sync");
}

}  // namespace

ModelBundle make_bundle(BundleSpec spec, uint64_t seed) {
    spec.validate();
    ModelBundle b;
    b.spec = std::move(spec);
    Rng root(seed);
    push_mlp(b, "encoder", b.spec.encoder, root.fork(1).next_u64());
    if (b.spec.post_pool) push_mlp(b, "post_pool", *b.spec.post_pool, root.fork(2).next_u64());
    if (b.spec.rff) {
        RffSpec r = *b.spec.rff;
        if (r.seed == 0) r.seed = root.fork(3).next_u64();
        b.spec.rff = r;
        b.names.push_back("rff.B");
        b.blocks.push_back("rff");
        b.values.push_back(rff_matrix(r));
        b.trainable.push_back(false);
    }
    if (b.spec.qp_encoder) push_mlp(b, "qp_encoder", *b.spec.qp_encoder, root.fork(4).next_u64());
    for (size_t h = 0; h < b.spec.heads.size(); ++h)
        push_mlp(b, "head" + std::to_string(h), b.spec.heads[h], root.fork(10 + h).next_u64());
    if (b.spec.ident) push_mlp(b, "ident", *b.spec.ident, root.fork(5).next_u64());
    return b;
}

WindowBatch pack_windows(const std::vector<SensorWindow>& windows) {
    PINNSE_CHECK(!windows.empty(), "pack_windows: empty batch");
    int64_t n_max = 0;
    const int64_t arity = windows[0].arity();
    for (const auto& w : windows) {
        w.validate();
        PINNSE_CHECK(w.arity() == arity, "pack_windows: arity mismatch across windows");
        n_max = std::max(n_max, w.n_rows());
    }
    const int64_t b = int64_t(windows.size());
    WindowBatch batch;
    batch.rows = Tensor(Shape{b, n_max, arity});
    batch.mask.assign(size_t(b * n_max), 0.0);
    for (int64_t s = 0; s < b; ++s) {
        const SensorWindow& w = windows[size_t(s)];
        const int64_t base_cols = w.rows.dim(1);
        for (int64_t r = 0; r < w.n_rows(); ++r) {
            for (int64_t c = 0; c < base_cols; ++c)
                batch.rows.at3(s, r, c) = w.rows.at2(r, c);
            for (size_t k = 0; k < w.statics.size(); ++k)
                batch.rows.at3(s, r, base_cols + int64_t(k)) = w.statics[k];
            batch.mask[size_t(s * n_max + r)] = 1.0;
        }
    }
    return batch;
}

TapeModel begin_model(ad::Tape& tape, const ModelBundle& bundle, const WindowBatch& batch) {
    const BundleSpec& spec = bundle.spec;
    PINNSE_CHECK(batch.rows.dim(2) == spec.window_arity(),
                 "encode: window arity " + std::to_string(batch.rows.dim(2)) +
                     " does not match encoder input " + std::to_string(spec.window_arity()));
    TapeModel m;
    register_params(tape, bundle, m);

    // normalize raw window rows (plain data; no gradient path)
    Tensor rows = batch.rows;
    const int64_t arity = rows.dim(2);
    for (int64_t i = 0; i < rows.numel(); ++i) {
        const AffineScale& sc = spec.window_scale[size_t(i % arity)];
        rows[i] = (rows[i] - sc.offset) / sc.scale;
    }
    ad::Var x = tape.leaf(rows, false);
    ad::Var phi = mlp_eval(tape, spec.encoder, m.encoder, x);
    m.fds = tape.pool(spec.pooling, phi, batch.mask);
    m.fvec = spec.post_pool ? mlp_eval(tape, *spec.post_pool, m.post_pool, m.fds) : m.fds;
    return m;
}

ad::Var make_qp_leaf(ad::Tape& tape, const ModelBundle& bundle, const Tensor& qps,
                     bool with_seeds) {
    const BundleSpec& spec = bundle.spec;
    PINNSE_CHECK(qps.rank() == 3 && qps.dim(2) == spec.n_qp(),
                 "qp leaf: expected [b, N_qp, " + std::to_string(spec.n_qp()) + "]");
    Tensor scaled = qps;
    const int64_t nq = qps.dim(2);
    for (int64_t i = 0; i < scaled.numel(); ++i) {
        const AffineScale& sc = spec.qp_scale[size_t(i % nq)];
        scaled[i] = (scaled[i] - sc.offset) / sc.scale;
    }
    if (!with_seeds) return tape.leaf(scaled, false);
    std::vector<ad::SeedSpec> seeds;
    const ad::JetLayout& lay = tape.layout();
    for (int k = 0; k < lay.n_dirs && k < int(nq); ++k)
        seeds.push_back({k, k, 1.0 / spec.qp_scale[size_t(k)].scale});
    return tape.leaf_seeded(scaled, seeds);
}

namespace {

ad::Var run_heads(ad::Tape& tape, const BundleSpec& spec, const TapeModel& model, ad::Var X) {
    ad::Var out;
    for (size_t h = 0; h < spec.heads.size(); ++h) {
        ad::Var y = mlp_eval(tape, spec.heads[h], model.heads[h], X);
        if (!out.valid())
            out = y;
        else if (spec.combine == HeadCombine::sum)
            out = tape.add(out, y);
        else
            out = tape.concat_last(out, y);
    }
    return out;
}

}  // namespace

ad::Var predict_fields_tape(ad::Tape& tape, const ModelBundle& bundle, const TapeModel& model,
                            ad::Var qp_leaf) {
    const BundleSpec& spec = bundle.spec;
    ad::Var qp_feat = qp_leaf;
    if (spec.rff) {
        ad::Var proj = tape.linear(qp_feat, model.rff_B);
        qp_feat = tape.concat_last(tape.cos(proj), tape.sin(proj));
    }
    if (spec.qp_encoder) qp_feat = mlp_eval(tape, *spec.qp_encoder, model.qp_encoder, qp_feat);
    ad::Var X = tape.concat_query(qp_feat, model.fvec);
    ad::Var y = run_heads(tape, spec, model, X);
    std::vector<double> scale, offset;
    for (const auto& s : spec.out_scale) {
        scale.push_back(s.scale);
        offset.push_back(s.offset);
    }
    return tape.affine_cols(y, scale, offset);
}

ad::Var predict_params_tape(ad::Tape& tape, const ModelBundle& bundle, const TapeModel& model) {
    const BundleSpec& spec = bundle.spec;
    PINNSE_CHECK(spec.ident.has_value(), "predict_params: bundle has no identification head");
    ad::Var feat = spec.ident_on_encoder_output ? model.fds : model.fvec;
    ad::Var y = mlp_eval(tape, *spec.ident, model.ident, feat);  // [b,1,np]
    const int64_t b = tape.shape(y)[0];
    const int64_t np = tape.shape(y)[2];
    y = tape.reshape(y, {b, np});
    std::vector<double> scale, offset;
    for (const auto& s : spec.ident_scale) {
        scale.push_back(s.scale);
        offset.push_back(s.offset);
    }
    return tape.affine_cols(y, scale, offset);
}

// ---- tape-free wrappers ----

Tensor encode(const ModelBundle& bundle, const SensorWindow& window) {
    ad::Tape tape;
    WindowBatch batch = pack_windows({window});
    TapeModel m = begin_model(tape, bundle, batch);
    return tape.value(m.fvec);
}

Tensor predict_fields(const ModelBundle& bundle, const std::vector<SensorWindow>& windows,
                      const Tensor& qps) {
    ad::Tape tape;
    TapeModel m = begin_model(tape, bundle, pack_windows(windows));
    ad::Var y = predict_fields_tape(tape, bundle, m, make_qp_leaf(tape, bundle, qps, false));
    return tape.value(y);
}

Tensor predict_params(const ModelBundle& bundle, const std::vector<SensorWindow>& windows) {
    ad::Tape tape;
    TapeModel m = begin_model(tape, bundle, pack_windows(windows));
    return tape.value(predict_params_tape(tape, bundle, m));
}

Tensor predict_field_derivative(const ModelBundle& bundle,
                                const std::vector<SensorWindow>& windows, const Tensor& qps,
                                int coord, int order) {
    PINNSE_CHECK(order == 1 || order == 2, "unsupported derivative order");
    PINNSE_CHECK(coord >= 0 && coord < bundle.spec.n_qp(), "derivative coord out of range");
    ad::JetLayout layout = ad::JetLayout::dirs({order});
    ad::Tape tape(layout);
    TapeModel m = begin_model(tape, bundle, pack_windows(windows));
    Tensor scaled = qps;
    const int64_t nq = qps.dim(2);
    for (int64_t i = 0; i < scaled.numel(); ++i) {
        const AffineScale& sc = bundle.spec.qp_scale[size_t(i % nq)];
        scaled[i] = (scaled[i] - sc.offset) / sc.scale;
    }
    ad::Var qp = tape.leaf_seeded(
        scaled, {{0, coord, 1.0 / bundle.spec.qp_scale[size_t(coord)].scale}});
    ad::Var y = predict_fields_tape(tape, bundle, m, qp);
    return tape.jet_plane(y, 0, order);
}

ad::JetLayout app_layout(const std::string& app) {
    if (app == "rossler") return ad::JetLayout::dirs({1});        // t
    if (app == "heat") return ad::JetLayout::dirs({1, 2});        // t, x
    if (app == "ns") return ad::JetLayout::dirs({1, 2, 2});       // t, x, y
    throw ConfigError("unknown app: " + app);
}

}  // namespace pinnse::nn
