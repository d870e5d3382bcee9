#include "pinnse/physics.hpp"

namespace pinnse::phys {

using ad::Tape;
using ad::Var;
using nn::ModelBundle;
using nn::TapeModel;

NsResidual ns_residual(const NsFieldDerivs& f, const NsParams& p) {
    const int64_t n = f.u.numel();
    NsResidual r{Tensor(f.u.shape()), Tensor(f.u.shape()), Tensor(f.u.shape())};
    for (int64_t i = 0; i < n; ++i) {
        r.mom_x[i] = f.u_t[i] + f.u[i] * f.u_x[i] + f.v[i] * f.u_y[i] + f.p_x[i] / p.rho -
                     p.nu * (f.u_xx[i] + f.u_yy[i]);
        r.mom_y[i] = f.v_t[i] + f.u[i] * f.v_x[i] + f.v[i] * f.v_y[i] + f.p_y[i] / p.rho -
                     p.nu * (f.v_xx[i] + f.v_yy[i]);
        r.mass[i] = f.u_x[i] + f.v_y[i];
    }
    return r;
}

Tensor heat_pde_residual(const Tensor& T_t, const Tensor& T_xx, double alpha) {
    Tensor r(T_t.shape());
    for (int64_t i = 0; i < r.numel(); ++i) r[i] = T_t[i] - alpha * T_xx[i];
    return r;
}

double heat_bc0_residual(double T, double T_x, const HeatParams& p, double q0) {
    return -p.k * T_x - (q0 - p.h * (T - p.t_inf));
}

double heat_bcL_residual(double T, double T_x, const HeatParams& p, double qL, RobinSign sign) {
    const double cond = sign == RobinSign::as_printed ? -p.k * T_x : p.k * T_x;
    return cond - (qL - p.h * (T - p.t_inf));
}

double LossParts::value(const std::string& name) const {
    for (const auto& [k, v] : parts)
        if (k == name) return v;
    throw ConfigError("no loss part named " + name);
}

namespace {

Var mean_abs(Tape& t, Var x) { return t.mean_all(t.abs(x)); }
Var mean_sq(Tape& t, Var x) { return t.mean_all(t.square(x)); }

/// value - labels with the labels as a constant leaf
Var diff_const(Tape& t, Var pred, const Tensor& labels) {
    return t.sub(pred, t.leaf(labels));
}

}  // namespace

LossParts build_rossler_loss(Tape& tape, const ModelBundle& bundle, const TapeModel& model,
                             const RosslerBatch& batch, const RosslerWeights& w) {
    // supervised branch (values only)
    Var sup_qp = nn::make_qp_leaf(tape, bundle, batch.sup_qps, false);
    Var sup_pred = nn::predict_fields_tape(tape, bundle, model, sup_qp);
    Var l_sup = mean_abs(tape, diff_const(tape, sup_pred, batch.sup_labels));

    // dynamics branch at collocation times
    Var ode_qp = nn::make_qp_leaf(tape, bundle, batch.ode_qps, true);
    Var pred = nn::predict_fields_tape(tape, bundle, model, ode_qp);
    Var xs = tape.select_col(pred, 0);
    Var ys = tape.select_col(pred, 1);
    Var zs = tape.select_col(pred, 2);
    Var xd = tape.deriv_part(xs, 0, 1);
    Var yd = tape.deriv_part(ys, 0, 1);
    Var zd = tape.deriv_part(zs, 0, 1);
    Var xv = tape.drop_tangents(xs);
    Var yv = tape.drop_tangents(ys);
    Var zv = tape.drop_tangents(zs);

    Var r1 = tape.add(xd, tape.add(yv, zv));
    Var r2 = tape.sub(tape.sub(yd, xv), tape.scalar_affine(yv, batch.phys.a, 0.0));
    Var c_leaf = tape.leaf(batch.c_true);
    Var zxc = tape.mul(zv, tape.sub_bcast(xv, c_leaf));
    Var r3 = tape.sub(tape.scalar_affine(zd, 1.0, -batch.phys.b), zxc);
    Var l_ode = tape.add(mean_abs(tape, r1), tape.add(mean_abs(tape, r2), mean_abs(tape, r3)));

    // parameter branch
    Var c_hat = nn::predict_params_tape(tape, bundle, model);  // [b,1]
    Var c_flat = tape.reshape(c_hat, {batch.c_true.numel()});
    Var l_p = mean_sq(tape, tape.sub(c_flat, c_leaf));

    Var total = tape.add(
        l_sup, tape.add(tape.scalar_affine(l_ode, w.lambda, 0.0),
                        tape.scalar_affine(l_p, w.beta, 0.0)));
    LossParts out;
    out.total = total;
    out.parts = {{"L_sup", tape.scalar_value(l_sup)},
                 {"L_ODE", tape.scalar_value(l_ode)},
                 {"L_P", tape.scalar_value(l_p)},
                 {"total", tape.scalar_value(total)}};
    return out;
}

LossParts build_ns_loss(Tape& tape, const ModelBundle& bundle, const TapeModel& model,
                        const NsBatch& batch, const NsWeights& w) {
    auto predict_at = [&](const Tensor& qps, bool seeded) {
        Var leaf = nn::make_qp_leaf(tape, bundle, qps, seeded);
        return nn::predict_fields_tape(tape, bundle, model, leaf);
    };

    // interior + inlet supervision
    Var pv = predict_at(batch.sup_vel_qps, false);
    Var uv = tape.concat_last(
        tape.reshape(tape.select_col(pv, 0),
                     {batch.sup_vel_qps.dim(0), batch.sup_vel_qps.dim(1), 1}),
        tape.reshape(tape.select_col(pv, 1),
                     {batch.sup_vel_qps.dim(0), batch.sup_vel_qps.dim(1), 1}));
    Var l_sup_v = mean_sq(tape, diff_const(tape, uv, batch.sup_vel_vals));

    Var pp = predict_at(batch.sup_p_qps, false);
    Var p_only = tape.reshape(tape.select_col(pp, 2),
                              {batch.sup_p_qps.dim(0), batch.sup_p_qps.dim(1), 1});
    Var l_sup_p = mean_sq(tape, diff_const(tape, p_only, batch.sup_p_vals));

    Var pi = predict_at(batch.inlet_qps, false);
    Var uv_inlet = tape.concat_last(
        tape.reshape(tape.select_col(pi, 0), {batch.inlet_qps.dim(0), batch.inlet_qps.dim(1), 1}),
        tape.reshape(tape.select_col(pi, 1),
                     {batch.inlet_qps.dim(0), batch.inlet_qps.dim(1), 1}));
    Var l_sup_inlet = mean_sq(tape, diff_const(tape, uv_inlet, batch.inlet_vals));
    Var l_sup = tape.add(l_sup_v, tape.add(l_sup_p, l_sup_inlet));

    // initial conditions: everything zero at t = 0
    Var pic = predict_at(batch.ic_qps, false);
    Var l_ic = tape.add(
        mean_sq(tape, tape.concat_last(
                          tape.reshape(tape.select_col(pic, 0),
                                       {batch.ic_qps.dim(0), batch.ic_qps.dim(1), 1}),
                          tape.reshape(tape.select_col(pic, 1),
                                       {batch.ic_qps.dim(0), batch.ic_qps.dim(1), 1}))),
        mean_sq(tape, tape.select_col(pic, 2)));

    // no-slip walls and cylinder
    Var pbc = predict_at(batch.bc_qps, false);
    Var l_bc = tape.add(mean_sq(tape, tape.select_col(pbc, 0)),
                        mean_sq(tape, tape.select_col(pbc, 1)));

    // physics residuals at collocation points
    Var pc = predict_at(batch.colloc_qps, true);
    Var us = tape.select_col(pc, 0);
    Var vs = tape.select_col(pc, 1);
    Var ps = tape.select_col(pc, 2);
    Var u = tape.drop_tangents(us), v = tape.drop_tangents(vs);
    Var u_t = tape.deriv_part(us, 0, 1);
    Var u_x = tape.deriv_part(us, 1, 1), u_xx = tape.deriv_part(us, 1, 2);
    Var u_y = tape.deriv_part(us, 2, 1), u_yy = tape.deriv_part(us, 2, 2);
    Var v_t = tape.deriv_part(vs, 0, 1);
    Var v_x = tape.deriv_part(vs, 1, 1), v_xx = tape.deriv_part(vs, 1, 2);
    Var v_y = tape.deriv_part(vs, 2, 1), v_yy = tape.deriv_part(vs, 2, 2);
    Var p_x = tape.deriv_part(ps, 1, 1), p_y = tape.deriv_part(ps, 2, 1);

    const double inv_rho = 1.0 / batch.phys.rho;
    Var visc_x = tape.scalar_affine(tape.add(u_xx, u_yy), -batch.phys.nu, 0.0);
    Var r_momx = tape.add(
        u_t, tape.add(tape.add(tape.mul(u, u_x), tape.mul(v, u_y)),
                      tape.add(tape.scalar_affine(p_x, inv_rho, 0.0), visc_x)));
    Var visc_y = tape.scalar_affine(tape.add(v_xx, v_yy), -batch.phys.nu, 0.0);
    Var r_momy = tape.add(
        v_t, tape.add(tape.add(tape.mul(u, v_x), tape.mul(v, v_y)),
                      tape.add(tape.scalar_affine(p_y, inv_rho, 0.0), visc_y)));
    Var r_mass = tape.add(u_x, v_y);
    Var l_pde = tape.add(mean_sq(tape, r_momx),
                         tape.add(mean_sq(tape, r_momy), mean_sq(tape, r_mass)));

    // inlet parameter identification
    Var prm = nn::predict_params_tape(tape, bundle, model);  // [b,2]
    Var l_param = mean_sq(tape, diff_const(tape, prm, batch.params_true));

    Var total = tape.add(
        tape.scalar_affine(l_sup, w.alpha_w, 0.0),
        tape.add(tape.scalar_affine(l_pde, w.lambda, 0.0),
                 tape.add(tape.scalar_affine(tape.add(l_ic, l_bc), w.eta, 0.0), l_param)));
    LossParts out;
    out.total = total;
    out.parts = {{"L_sup", tape.scalar_value(l_sup)},   {"L_ICs", tape.scalar_value(l_ic)},
                 {"L_BCs", tape.scalar_value(l_bc)},    {"L_PDE", tape.scalar_value(l_pde)},
                 {"L_P", tape.scalar_value(l_param)},   {"total", tape.scalar_value(total)}};
    return out;
}

LossParts build_heat_loss(Tape& tape, const ModelBundle& bundle, const TapeModel& model,
                          const HeatBatch& batch, const HeatWeights& w) {
    const double inv_T = 1.0 / batch.temp_scale;
    auto predict_at = [&](const Tensor& qps, bool seeded) {
        Var leaf = nn::make_qp_leaf(tape, bundle, qps, seeded);
        return nn::predict_fields_tape(tape, bundle, model, leaf);
    };

    Var ps = predict_at(batch.sup_qps, false);
    Var l_sup = mean_sq(tape, tape.scalar_affine(diff_const(tape, ps, batch.sup_vals), inv_T, 0.0));

    Var pic = predict_at(batch.ic_qps, false);
    Var l_ic = mean_sq(tape, tape.scalar_affine(diff_const(tape, pic, batch.ic_vals), inv_T, 0.0));

    // Robin boundaries: residual / k, scaled by a reference flux
    auto bc_residual = [&](const Tensor& qps, const Tensor& qk, double cond_sign) {
        Var pred = predict_at(qps, true);
        Var Ts = tape.select_col(pred, 0);
        Var T_x = tape.deriv_part(Ts, 1, 1);
        Var T = tape.drop_tangents(Ts);
        Var conv = tape.mul_bcast(tape.sub_bcast(T, tape.leaf(batch.t_inf)),
                                  tape.leaf(batch.h_over_k));
        Var r = tape.add(tape.scalar_affine(T_x, cond_sign, 0.0),
                         tape.add(tape.scalar_affine(tape.leaf(qk), -1.0, 0.0), conv));
        return mean_sq(tape, tape.scalar_affine(r, 1.0 / batch.fluxk_scale, 0.0));
    };
    Var l_bc0 = bc_residual(batch.bc0_qps, batch.q0k_t, -1.0);
    const double sL = batch.bcL_sign == RobinSign::as_printed ? -1.0 : 1.0;
    Var l_bcL = bc_residual(batch.bcL_qps, batch.qLk_t, sL);
    Var l_bc = tape.add(l_bc0, l_bcL);

    // PDE residual at collocation points
    Var pc = predict_at(batch.colloc_qps, true);
    Var Ts = tape.select_col(pc, 0);
    Var T_t = tape.deriv_part(Ts, 0, 1);
    Var T_xx = tape.deriv_part(Ts, 1, 2);
    Var r_pde = tape.sub(T_t, tape.mul_bcast(T_xx, tape.leaf(batch.alpha)));
    Var l_pde =
        mean_sq(tape, tape.scalar_affine(r_pde, batch.time_scale / batch.temp_scale, 0.0));

    Var total = tape.add(
        tape.scalar_affine(l_pde, w.beta1, 0.0),
        tape.add(tape.scalar_affine(l_ic, w.beta2, 0.0),
                 tape.add(tape.scalar_affine(l_bc, w.beta3, 0.0),
                          tape.scalar_affine(l_sup, w.beta4, 0.0))));
    LossParts out;
    out.total = total;
    out.parts = {{"L_PDE", tape.scalar_value(l_pde)}, {"L_IC", tape.scalar_value(l_ic)},
                 {"L_BC", tape.scalar_value(l_bc)},   {"L_SUP", tape.scalar_value(l_sup)},
                 {"total", tape.scalar_value(total)}};
    return out;
}

CrossvalZ crossval_residual_z(const ModelBundle& bundle, const nn::SensorWindow& window,
                              const Tensor& eval_times, double b_param) {
    ad::Tape tape(nn::app_layout("rossler"));
    nn::WindowBatch wb = nn::pack_windows({window});
    nn::TapeModel model = nn::begin_model(tape, bundle, wb);
    Tensor qps(Shape{1, eval_times.numel(), 1}, eval_times.vec());
    Var qp = nn::make_qp_leaf(tape, bundle, qps, true);
    Var pred = nn::predict_fields_tape(tape, bundle, model, qp);
    Tensor x = tape.value(tape.select_col(pred, 0));
    Tensor z = tape.value(tape.select_col(pred, 2));
    Tensor zd = tape.value(tape.deriv_part(tape.select_col(pred, 2), 0, 1));
    Tensor c_hat = tape.value(nn::predict_params_tape(tape, bundle, model));

    CrossvalZ out;
    out.c_hat = c_hat[0];
    double acc = 0.0, acc_printed = 0.0;
    const int64_t n = eval_times.numel();
    for (int64_t i = 0; i < n; ++i) {
        const double zxc = z[i] * (x[i] - out.c_hat);
        acc += std::fabs(zd[i] - b_param - zxc);
        acc_printed += std::fabs(zd[i] - b_param + zxc);
    }
    out.l_ode_z = acc / double(n);
    out.l_ode_z_printed = acc_printed / double(n);
    return out;
}

}  // namespace pinnse::phys
