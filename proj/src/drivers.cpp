#include "pinnse/drivers.hpp"

#include <algorithm>
#include <cmath>

namespace pinnse::apps {

using nn::AffineScale;

// ---------------------------------------------------------------- Rossler

RosslerPrepared prepare_rossler(const data::Dataset& ds) {
    RosslerPrepared p;
    const Tensor& times = ds.array("times");
    const Tensor& exact = ds.array("exact");
    const Tensor& noisy = ds.array("noisy");
    p.c = ds.scalar("c");
    p.a = ds.scalar("a");
    p.b = ds.scalar("b");

    nn::SensorWindow w_noisy = data::extract_window(times, noisy, 0.5, 40);
    nn::SensorWindow w_exact = data::extract_window(times, exact, 0.5, 40);
    p.grid_noisy = w_noisy.rows;
    p.grid_exact = w_exact.rows;
    p.sup_times = Tensor(Shape{40});
    p.sup_noisy = Tensor(Shape{40, 3});
    for (int64_t i = 0; i < 40; ++i) {
        p.sup_times[i] = w_noisy.rows.at2(i, 0);
        for (int64_t j = 0; j < 3; ++j) p.sup_noisy.at2(i, j) = w_noisy.rows.at2(i, 1 + j);
    }
    // 0.05 s evaluation grid over [0, 20)
    nn::SensorWindow w_eval = data::extract_window(times, exact, 0.05, 400);
    p.eval_times = Tensor(Shape{400});
    p.eval_exact = Tensor(Shape{400, 3});
    for (int64_t i = 0; i < 400; ++i) {
        p.eval_times[i] = w_eval.rows.at2(i, 0);
        for (int64_t j = 0; j < 3; ++j) p.eval_exact.at2(i, j) = w_eval.rows.at2(i, 1 + j);
    }
    return p;
}

nn::SensorWindow rossler_window(const RosslerPrepared& p, int n_rows, bool noisy) {
    PINNSE_CHECK(n_rows >= 1 && n_rows <= 40, "rossler window size out of range");
    const Tensor& grid = noisy ? p.grid_noisy : p.grid_exact;
    nn::SensorWindow w;
    w.rows = Tensor(Shape{n_rows, 4});
    for (int64_t i = 0; i < n_rows; ++i)
        for (int64_t j = 0; j < 4; ++j) w.rows.at2(i, j) = grid.at2(i, j);
    return w;
}

phys::RosslerBatch make_rossler_batch(const std::vector<const RosslerPrepared*>& sets,
                                      int64_t n_colloc, Rng& rng) {
    const int64_t b = int64_t(sets.size());
    phys::RosslerBatch batch;
    batch.sup_qps = Tensor(Shape{b, 40, 1});
    batch.sup_labels = Tensor(Shape{b, 40, 3});
    batch.ode_qps = Tensor(Shape{b, n_colloc, 1});
    batch.c_true = Tensor(Shape{b});
    for (int64_t s = 0; s < b; ++s) {
        const RosslerPrepared& p = *sets[size_t(s)];
        for (int64_t i = 0; i < 40; ++i) {
            batch.sup_qps.at3(s, i, 0) = p.sup_times[i];
            for (int64_t j = 0; j < 3; ++j) batch.sup_labels.at3(s, i, j) = p.sup_noisy.at2(i, j);
        }
        for (int64_t i = 0; i < n_colloc; ++i)
            batch.ode_qps.at3(s, i, 0) = rng.uniform(0.0, 20.0);
        batch.c_true[s] = p.c;
        batch.phys.a = p.a;
        batch.phys.b = p.b;
    }
    return batch;
}

nn::BundleSpec rossler_bundle_spec(int width, int enc_layers, int pinn_layers) {
    nn::BundleSpec spec;
    spec.app = "rossler";
    spec.encoder = nn::mlp_spec(4, width, enc_layers, width, ActivationKind::gelu);
    spec.pooling = PoolKind::mean_square;
    spec.post_pool = nn::mlp_spec(width, width, 3, width, ActivationKind::gelu);
    spec.heads = {nn::mlp_spec(width + 1, width, pinn_layers, 3, ActivationKind::gelu_sin)};
    spec.combine = nn::HeadCombine::sum;
    spec.ident = nn::mlp_spec(width, width, 3, 1, ActivationKind::gelu);
    // raw seconds for time; state channels lightly scaled
    spec.window_scale = {AffineScale{0.0, 1.0}, AffineScale{0.0, 10.0},
                         AffineScale{0.0, 10.0}, AffineScale{0.0, 12.0}};
    spec.qp_scale = {AffineScale{0.0, 1.0}};
    spec.out_scale = {AffineScale{0.0, 10.0}, AffineScale{0.0, 10.0}, AffineScale{0.0, 12.0}};
    spec.ident_scale = {AffineScale{5.5, 1.5}};
    return spec;
}

// -------------------------------------------------------------------- heat

HeatPrepared prepare_heat(const data::Dataset& ds) {
    HeatPrepared p;
    p.sensor_rows = ds.array("sensor_rows");
    p.params.alpha = ds.scalar("alpha");
    p.params.k = ds.scalar("k");
    p.params.h = ds.scalar("h");
    p.params.q0_over_k = ds.scalar("q0_over_k");
    p.params.qL_over_k = ds.scalar("qL_over_k");
    p.params.thickness = ds.scalar("thickness");
    p.params.t_inf = ds.scalar("t_inf");
    p.params.t_pdb = ds.scalar("t_pdb");
    p.thickness = p.params.thickness;
    p.with_drop = ds.scalar_or("with_drop", 0.0) != 0.0;
    p.t00 = ds.scalar("t00");
    p.t0L = ds.scalar("t0L");
    p.t_final = ds.scalar("T");
    p.field_times = ds.array("times");
    p.field_xs = ds.array("xs");
    p.field = ds.array("field");
    return p;
}

nn::SensorWindow heat_window_prefix(const HeatPrepared& p, int n_rows) {
    const int64_t avail = p.sensor_rows.dim(0);
    PINNSE_CHECK(n_rows >= 1 && int64_t(n_rows) <= avail, "heat window size exceeds rows");
    nn::SensorWindow w;
    w.rows = Tensor(Shape{n_rows, 5});
    for (int64_t i = 0; i < n_rows; ++i)
        for (int64_t j = 0; j < 5; ++j) w.rows.at2(i, j) = p.sensor_rows.at2(i, j);
    w.statics = {p.thickness};
    return w;
}

phys::HeatBatch make_heat_batch(const std::vector<const HeatPrepared*>& sets,
                                const HeatBatchConfig& cfg, Rng& rng) {
    const int64_t b = int64_t(sets.size());
    phys::HeatBatch batch;
    const int64_t ns = 2 * cfg.n_sup_times;
    batch.sup_qps = Tensor(Shape{b, ns, 2});
    batch.sup_vals = Tensor(Shape{b, ns, 1});
    batch.ic_qps = Tensor(Shape{b, cfg.n_ic, 2});
    batch.ic_vals = Tensor(Shape{b, cfg.n_ic, 1});
    batch.bc0_qps = Tensor(Shape{b, cfg.n_bc, 2});
    batch.bcL_qps = Tensor(Shape{b, cfg.n_bc, 2});
    batch.q0k_t = Tensor(Shape{b, cfg.n_bc});
    batch.qLk_t = Tensor(Shape{b, cfg.n_bc});
    batch.colloc_qps = Tensor(Shape{b, cfg.n_colloc, 2});
    batch.alpha = Tensor(Shape{b});
    batch.h_over_k = Tensor(Shape{b});
    batch.t_inf = Tensor(Shape{b});
    batch.bcL_sign = cfg.bcL_sign;
    batch.temp_scale = cfg.temp_scale;
    batch.time_scale = cfg.time_scale;
    batch.fluxk_scale = cfg.fluxk_scale;

    for (int64_t s = 0; s < b; ++s) {
        const HeatPrepared& p = *sets[size_t(s)];
        const int64_t n_rows = p.sensor_rows.dim(0);
        // supervision from the noisy sensor curves, random rows each step
        for (int64_t i = 0; i < cfg.n_sup_times; ++i) {
            const int64_t r = int64_t(rng.below(uint64_t(n_rows)));
            const double t = p.sensor_rows.at2(r, 0);
            batch.sup_qps.at3(s, 2 * i, 0) = t;
            batch.sup_qps.at3(s, 2 * i, 1) = 0.0;
            batch.sup_vals.at3(s, 2 * i, 0) = p.sensor_rows.at2(r, 1);
            batch.sup_qps.at3(s, 2 * i + 1, 0) = t;
            batch.sup_qps.at3(s, 2 * i + 1, 1) = p.thickness;
            batch.sup_vals.at3(s, 2 * i + 1, 0) = p.sensor_rows.at2(r, 2);
        }
        for (int64_t i = 0; i < cfg.n_ic; ++i) {
            const double x = rng.uniform(0.0, p.thickness);
            batch.ic_qps.at3(s, i, 0) = 0.0;
            batch.ic_qps.at3(s, i, 1) = x;
            batch.ic_vals.at3(s, i, 0) = p.t00 + (p.t0L - p.t00) * x / p.thickness;
        }
        for (int64_t i = 0; i < cfg.n_bc; ++i) {
            const double t = rng.uniform(0.0, p.t_final);
            batch.bc0_qps.at3(s, i, 0) = t;
            batch.bc0_qps.at3(s, i, 1) = 0.0;
            batch.q0k_t.at2(s, i) = p.params.q0_over_k;
            const double tL = rng.uniform(0.0, p.t_final);
            batch.bcL_qps.at3(s, i, 0) = tL;
            batch.bcL_qps.at3(s, i, 1) = p.thickness;
            batch.qLk_t.at2(s, i) =
                (p.with_drop && tL >= p.params.t_pdb) ? 0.0 : p.params.qL_over_k;
        }
        for (int64_t i = 0; i < cfg.n_colloc; ++i) {
            batch.colloc_qps.at3(s, i, 0) = rng.uniform(0.0, p.t_final);
            batch.colloc_qps.at3(s, i, 1) = rng.uniform(0.0, p.thickness);
        }
        batch.alpha[s] = p.params.alpha;
        batch.h_over_k[s] = p.params.h / p.params.k;
        batch.t_inf[s] = p.params.t_inf;
    }
    return batch;
}

nn::BundleSpec heat_bundle_spec(int width, int rff_freqs, double rff_sigma, uint64_t rff_seed) {
    nn::BundleSpec spec;
    spec.app = "heat";
    spec.encoder = nn::mlp_spec(6, width, 3, width / 2, ActivationKind::gelu);
    spec.pooling = PoolKind::sum_abs;
    nn::RffSpec rff;
    rff.input_dim = 2;
    rff.n_freq = rff_freqs;
    rff.sigma = rff_sigma;
    rff.seed = rff_seed;
    spec.rff = rff;
    spec.qp_encoder = nn::mlp_spec(2 * rff_freqs, width, 3, width / 2, ActivationKind::swish);
    spec.heads = {nn::mlp_spec(width, width, 3, 1, ActivationKind::swish)};
    spec.combine = nn::HeadCombine::sum;
    // columns: t, T0, TL, P0, PL, thickness
    spec.window_scale = {AffineScale{22.5, 22.5}, AffineScale{100.0, 100.0},
                         AffineScale{100.0, 100.0}, AffineScale{50.0, 50.0},
                         AffineScale{50.0, 50.0}, AffineScale{2.0e-3, 0.45e-3}};
    spec.qp_scale = {AffineScale{0.0, 45.0}, AffineScale{0.0, 2.41e-3}};
    spec.out_scale = {AffineScale{100.0, 100.0}};
    return spec;
}

// ---------------------------------------------------------------------- NS

NsPrepared prepare_ns(const data::Dataset& ds) {
    NsPrepared p;
    p.coords = ds.array("coords");
    p.fields = ds.array("fields");
    p.sensor_coords = ds.array("sensor_coords");
    p.sensor_traces = data::ns_sensor_traces(ds);
    p.u_max = ds.scalar("U_max");
    p.freq = ds.scalar("f");
    p.dt = ds.scalar("dt");
    p.t_final = ds.scalar("T");
    p.params.u_max = p.u_max;
    p.params.freq = p.freq;
    return p;
}

nn::SensorWindow ns_window(const NsPrepared& p, int n_rows) {
    const int64_t nt = p.sensor_traces.dim(0);
    PINNSE_CHECK(int64_t(n_rows) <= nt, "ns window exceeds snapshots");
    nn::SensorWindow w;
    w.rows = Tensor(Shape{n_rows, 13});
    for (int64_t i = 0; i < n_rows; ++i) {
        w.rows.at2(i, 0) = double(i) * p.dt;
        for (int64_t j = 0; j < 12; ++j) w.rows.at2(i, 1 + j) = p.sensor_traces.at2(i, j);
    }
    return w;
}

NsSupervisionPool make_ns_pool(const NsPrepared& p, const NsBatchConfig& cfg, uint64_t seed) {
    Rng rng(seed ^ 0x9e11f00dULL);
    NsSupervisionPool pool;
    const int64_t n_nodes = p.coords.dim(0);
    for (int64_t i = 0; i < cfg.n_vel_locs; ++i)
        pool.vel_nodes.push_back(int64_t(rng.below(uint64_t(n_nodes))));
    for (int64_t i = 0; i < cfg.n_p_pool; ++i)
        pool.p_nodes.push_back(int64_t(rng.below(uint64_t(n_nodes))));
    return pool;
}

phys::NsBatch make_ns_batch(const std::vector<const NsPrepared*>& sets,
                            const std::vector<const NsSupervisionPool*>& pools,
                            const NsBatchConfig& cfg, Rng& rng) {
    const int64_t b = int64_t(sets.size());
    phys::NsBatch batch;
    const int64_t nv = cfg.n_vel_locs * cfg.n_vel_times;
    const int64_t np = cfg.n_p_locs * cfg.n_p_times;
    const int64_t ni = cfg.n_inlet_y * cfg.n_inlet_times;
    batch.sup_vel_qps = Tensor(Shape{b, nv, 3});
    batch.sup_vel_vals = Tensor(Shape{b, nv, 2});
    batch.sup_p_qps = Tensor(Shape{b, np, 3});
    batch.sup_p_vals = Tensor(Shape{b, np, 1});
    batch.inlet_qps = Tensor(Shape{b, ni, 3});
    batch.inlet_vals = Tensor(Shape{b, ni, 2});
    batch.ic_qps = Tensor(Shape{b, cfg.n_ic, 3});
    batch.bc_qps = Tensor(Shape{b, cfg.n_bc, 3});
    batch.colloc_qps = Tensor(Shape{b, cfg.n_colloc, 3});
    batch.params_true = Tensor(Shape{b, 2});

    for (int64_t s = 0; s < b; ++s) {
        const NsPrepared& p = *sets[size_t(s)];
        const NsSupervisionPool& pool = *pools[size_t(s)];
        const int64_t nt = p.fields.dim(0);
        batch.phys = p.params;  // geometry constants are shared
        auto put_qp = [&](Tensor& qps, int64_t row, double t, double x, double y) {
            qps.at3(s, row, 0) = t;
            qps.at3(s, row, 1) = x;
            qps.at3(s, row, 2) = y;
        };
        int64_t r = 0;
        for (int64_t vi = 0; vi < cfg.n_vel_locs; ++vi) {
            const int64_t node = pool.vel_nodes[size_t(vi)];
            for (int64_t ti = 0; ti < cfg.n_vel_times; ++ti, ++r) {
                const int64_t it = int64_t(rng.below(uint64_t(nt)));
                put_qp(batch.sup_vel_qps, r, double(it) * p.dt, p.coords.at2(node, 0),
                       p.coords.at2(node, 1));
                batch.sup_vel_vals.at3(s, r, 0) = p.fields.at3(it, node, 0);
                batch.sup_vel_vals.at3(s, r, 1) = p.fields.at3(it, node, 1);
            }
        }
        r = 0;
        for (int64_t pi = 0; pi < cfg.n_p_locs; ++pi) {
            const int64_t node = pool.p_nodes[rng.below(pool.p_nodes.size())];
            for (int64_t ti = 0; ti < cfg.n_p_times; ++ti, ++r) {
                const int64_t it = int64_t(rng.below(uint64_t(nt)));
                put_qp(batch.sup_p_qps, r, double(it) * p.dt, p.coords.at2(node, 0),
                       p.coords.at2(node, 1));
                batch.sup_p_vals.at3(s, r, 0) = p.fields.at3(it, node, 2);
            }
        }
        r = 0;
        for (int64_t yi = 0; yi < cfg.n_inlet_y; ++yi)
            for (int64_t ti = 0; ti < cfg.n_inlet_times; ++ti, ++r) {
                const double y = p.params.height * (double(yi) + 0.5) / double(cfg.n_inlet_y);
                const double t = rng.uniform(0.0, p.t_final);
                put_qp(batch.inlet_qps, r, t, 0.0, y);
                double ux, uy;
                phys::inlet_velocity(t, y, p.params, ux, uy);
                batch.inlet_vals.at3(s, r, 0) = ux;
                batch.inlet_vals.at3(s, r, 1) = uy;
            }
        for (int64_t i = 0; i < cfg.n_ic; ++i)
            put_qp(batch.ic_qps, i, 0.0, rng.uniform(0.0, p.params.length),
                   rng.uniform(0.0, p.params.height));
        for (int64_t i = 0; i < cfg.n_bc; ++i) {
            const double t = rng.uniform(0.0, p.t_final);
            if (i % 3 == 2) {
                // cylinder ring
                const double th = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
                put_qp(batch.bc_qps, i, t, p.params.cyl_x + p.params.cyl_r * std::cos(th),
                       p.params.cyl_y + p.params.cyl_r * std::sin(th));
            } else {
                const double x = rng.uniform(0.0, p.params.length);
                put_qp(batch.bc_qps, i, t, x, (i % 3 == 0) ? 0.0 : p.params.height);
            }
        }
        for (int64_t i = 0; i < cfg.n_colloc; ++i)
            put_qp(batch.colloc_qps, i, rng.uniform(0.0, p.t_final),
                   rng.uniform(0.0, p.params.length), rng.uniform(0.0, p.params.height));
        batch.params_true.at2(s, 0) = p.u_max;
        batch.params_true.at2(s, 1) = p.freq;
    }
    return batch;
}

nn::BundleSpec ns_bundle_spec(int enc_width, int pinn_width, int n_heads) {
    nn::BundleSpec spec;
    spec.app = "ns";
    spec.encoder = nn::mlp_spec(13, enc_width, 4, enc_width, ActivationKind::sin_swish);
    spec.pooling = PoolKind::sum;
    spec.post_pool = nn::mlp_spec(enc_width, enc_width, 2, 5, ActivationKind::sin_swish);
    for (int h = 0; h < n_heads; ++h)
        spec.heads.push_back(nn::mlp_spec(5 + 3, pinn_width, 5, 3, ActivationKind::sin_swish));
    spec.combine = nn::HeadCombine::sum;
    spec.ident = nn::mlp_spec(enc_width, enc_width, 4, 2, ActivationKind::sin_swish);
    spec.ident_on_encoder_output = true;
    spec.window_scale = {AffineScale{3.0, 3.0}};  // t column; pressure columns appended below
    for (int j = 0; j < 12; ++j) spec.window_scale.push_back(AffineScale{0.0, 1.0});
    spec.qp_scale = {AffineScale{0.0, 6.0}, AffineScale{0.0, 0.55}, AffineScale{0.0, 0.205}};
    spec.out_scale = {AffineScale{0.0, 1.0}, AffineScale{0.0, 1.0}, AffineScale{0.0, 1.0}};
    spec.ident_scale = {AffineScale{0.175, 0.125}, AffineScale{3.0, 2.0}};
    return spec;
}

}  // namespace pinnse::apps
