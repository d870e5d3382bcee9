#include "pinnse/eval.hpp"

#include <algorithm>
#include <cmath>

#include "pinnse/parallel.hpp"

namespace pinnse::apps {

using metrics::Report;

metrics::Report rossler_eval(const nn::ModelBundle& bundle,
                             const std::vector<data::Dataset>& sets,
                             const std::vector<int>& window_sizes,
                             const std::vector<double>& noise_levels, int n_threads) {
    std::vector<RosslerPrepared> prep;
    for (const auto& d : sets) prep.push_back(prepare_rossler(d));

    Report rep;
    rep.columns = {"window",      "noise",       "r2_c",        "smae_x_mean", "smae_x_med",
                   "smae_x_p90",  "smae_y_mean", "smae_y_med",  "smae_y_p90",  "smae_z_mean",
                   "smae_z_med",  "smae_z_p90"};
    for (int w : window_sizes) {
        for (double noise : noise_levels) {
            const bool noisy = noise > 0.0;
            std::vector<nn::SensorWindow> windows;
            for (const auto& p : prep) windows.push_back(rossler_window(p, w, noisy));
            Tensor c_hat = nn::predict_params(bundle, windows);
            std::vector<double> c_true, c_pred;
            for (size_t i = 0; i < prep.size(); ++i) {
                c_true.push_back(prep[i].c);
                c_pred.push_back(c_hat[int64_t(i)]);
            }
            const double r2 = metrics::r_squared(c_true, c_pred);

            // trajectory errors on the 0.05 s grid
            std::vector<std::array<double, 3>> per_set(prep.size(), std::array<double, 3>{});
            parallel_for(int64_t(prep.size()), n_threads, [&](int64_t i) {
                Tensor qps(Shape{1, prep[size_t(i)].eval_times.numel(), 1},
                           prep[size_t(i)].eval_times.vec());
                Tensor pred = nn::predict_fields(bundle, {windows[size_t(i)]}, qps);
                for (int64_t ch = 0; ch < 3; ++ch) {
                    std::vector<double> yt, yp;
                    for (int64_t k = 0; k < prep[size_t(i)].eval_times.numel(); ++k) {
                        yt.push_back(prep[size_t(i)].eval_exact.at2(k, ch));
                        yp.push_back(pred.at3(0, k, ch));
                    }
                    per_set[size_t(i)][size_t(ch)] = metrics::scaled_mae(yt, yp);
                }
            });
            std::vector<std::vector<double>> smae(3);
            for (size_t i = 0; i < prep.size(); ++i)
                for (int ch = 0; ch < 3; ++ch) smae[size_t(ch)].push_back(per_set[i][size_t(ch)]);
            std::vector<double> row{double(w), noise, r2};
            for (int ch = 0; ch < 3; ++ch) {
                row.push_back(metrics::time_mean(smae[size_t(ch)]));
                row.push_back(metrics::percentile(smae[size_t(ch)], 50.0));
                row.push_back(metrics::percentile(smae[size_t(ch)], 90.0));
            }
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

CrossvalScatter rossler_crossval(const nn::ModelBundle& bundle,
                                 const std::vector<data::Dataset>& sets, int window_size,
                                 bool noisy) {
    PINNSE_CHECK(sets.size() >= 3, "crossval: need at least 3 datasets");
    CrossvalScatter out;
    out.scatter.columns = {"dataset", "mae_z", "l_ode_z", "l_ode_z_printed", "c_hat", "c_true"};
    std::vector<double> maes, residuals, printed;
    for (size_t i = 0; i < sets.size(); ++i) {
        RosslerPrepared p = prepare_rossler(sets[i]);
        nn::SensorWindow w = rossler_window(p, window_size, noisy);
        phys::CrossvalZ cv = phys::crossval_residual_z(bundle, w, p.eval_times, p.b);
        Tensor qps(Shape{1, p.eval_times.numel(), 1}, p.eval_times.vec());
        Tensor pred = nn::predict_fields(bundle, {w}, qps);
        std::vector<double> zt, zp;
        for (int64_t k = 0; k < p.eval_times.numel(); ++k) {
            zt.push_back(p.eval_exact.at2(k, 2));
            zp.push_back(pred.at3(0, k, 2));
        }
        const double mae_z = metrics::mae(zt, zp);
        maes.push_back(mae_z);
        residuals.push_back(cv.l_ode_z);
        printed.push_back(cv.l_ode_z_printed);
        out.scatter.rows.push_back(
            {double(i), mae_z, cv.l_ode_z, cv.l_ode_z_printed, cv.c_hat, p.c});
    }
    out.r2 = metrics::pearson_r2(maes, residuals);
    out.r2_printed = metrics::pearson_r2(maes, printed);
    return out;
}

namespace {

double interp_field(const Tensor& times, const Tensor& xs, const Tensor& field, double t,
                    double x) {
    // bilinear interpolation on the solver grid
    const int64_t nt = times.numel(), nx = xs.numel();
    auto clamp_idx = [](int64_t i, int64_t n) { return std::max<int64_t>(0, std::min(i, n - 2)); };
    int64_t it = clamp_idx(int64_t((t - times[0]) / (times[1] - times[0])), nt);
    int64_t ix = clamp_idx(int64_t((x - xs[0]) / (xs[1] - xs[0])), nx);
    const double wt = std::clamp((t - times[it]) / (times[it + 1] - times[it]), 0.0, 1.0);
    const double wx = std::clamp((x - xs[ix]) / (xs[ix + 1] - xs[ix]), 0.0, 1.0);
    return (1 - wt) * ((1 - wx) * field.at2(it, ix) + wx * field.at2(it, ix + 1)) +
           wt * ((1 - wx) * field.at2(it + 1, ix) + wx * field.at2(it + 1, ix + 1));
}

}  // namespace

metrics::Report heat_eval_positions(const nn::ModelBundle& bundle,
                                    const std::vector<data::Dataset>& sets,
                                    const HeatEvalOptions& opt) {
    std::vector<HeatPrepared> prep;
    for (const auto& d : sets) prep.push_back(prepare_heat(d));

    Report rep;
    rep.columns = {"position_frac", "t_hi", "ape95_mean", "ape95_p90", "mae_mean", "mae_p90"};
    for (double frac : opt.positions) {
        for (double t_hi : opt.time_ranges) {
            std::vector<double> ape95s(prep.size(), 0.0), maes(prep.size(), 0.0);
            parallel_for(int64_t(prep.size()), opt.n_threads, [&](int64_t pi) {
                const auto& p = prep[size_t(pi)];
                const int rows = std::min<int>(opt.eval_window, int(p.sensor_rows.dim(0)));
                nn::SensorWindow w = heat_window_prefix(p, rows);
                const double x = frac * p.thickness;
                Tensor qps(Shape{1, opt.n_t_eval, 2});
                std::vector<double> truth;
                for (int64_t k = 0; k < opt.n_t_eval; ++k) {
                    const double t = t_hi * double(k) / double(opt.n_t_eval - 1);
                    qps.at3(0, k, 0) = t;
                    qps.at3(0, k, 1) = x;
                    truth.push_back(interp_field(p.field_times, p.field_xs, p.field, t, x));
                }
                Tensor pred = nn::predict_fields(bundle, {w}, qps);
                std::vector<double> yp;
                for (int64_t k = 0; k < opt.n_t_eval; ++k) yp.push_back(pred.at3(0, k, 0));
                metrics::MapeResult mr = metrics::mape_ape95(truth, yp);
                ape95s[size_t(pi)] = mr.ape95;
                maes[size_t(pi)] = metrics::mae(truth, yp);
            });
            rep.rows.push_back({frac, t_hi, metrics::time_mean(ape95s),
                                metrics::percentile(ape95s, 90.0), metrics::time_mean(maes),
                                metrics::percentile(maes, 90.0)});
        }
    }
    return rep;
}

metrics::Report heat_eval_windows(const nn::ModelBundle& bundle,
                                  const std::vector<data::Dataset>& sets,
                                  const HeatEvalOptions& opt) {
    std::vector<HeatPrepared> prep;
    for (const auto& d : sets) prep.push_back(prepare_heat(d));
    Report rep;
    rep.columns = {"window", "ape95_mean", "ape95_p90", "mae_mean", "mae_p90"};
    const double t_hi = opt.time_ranges.back();
    for (int wsize : opt.window_sizes) {
        std::vector<double> ape95s, maes;
        for (const auto& p : prep) {
            if (int64_t(wsize) > p.sensor_rows.dim(0)) continue;
            nn::SensorWindow w = heat_window_prefix(p, wsize);
            for (double frac : {0.0, 1.0}) {
                const double x = frac * p.thickness;
                Tensor qps(Shape{1, opt.n_t_eval, 2});
                std::vector<double> truth;
                for (int64_t k = 0; k < opt.n_t_eval; ++k) {
                    const double t = t_hi * double(k) / double(opt.n_t_eval - 1);
                    qps.at3(0, k, 0) = t;
                    qps.at3(0, k, 1) = x;
                    truth.push_back(interp_field(p.field_times, p.field_xs, p.field, t, x));
                }
                Tensor pred = nn::predict_fields(bundle, {w}, qps);
                std::vector<double> yp;
                for (int64_t k = 0; k < opt.n_t_eval; ++k) yp.push_back(pred.at3(0, k, 0));
                metrics::MapeResult mr = metrics::mape_ape95(truth, yp);
                ape95s.push_back(mr.ape95);
                maes.push_back(metrics::mae(truth, yp));
            }
        }
        if (ape95s.empty()) continue;
        rep.rows.push_back({double(wsize), metrics::time_mean(ape95s),
                            metrics::percentile(ape95s, 90.0), metrics::time_mean(maes),
                            metrics::percentile(maes, 90.0)});
    }
    return rep;
}

NsEvalResult ns_eval(const nn::ModelBundle& bundle, const std::vector<data::Dataset>& sets,
                     const NsEvalOptions& opt) {
    std::vector<NsPrepared> prep;
    for (const auto& d : sets) prep.push_back(prepare_ns(d));
    NsEvalResult out;

    // field errors on t > t_start_frac * T: time-averaged spatial metrics
    struct PerSet {
        double mae[3], med[3], p90[3];
        double umax_pred, f_pred;
        double cv_model, cv_comparison;
    };
    std::vector<PerSet> per(prep.size(), PerSet{});
    parallel_for(int64_t(prep.size()), opt.n_threads, [&](int64_t pi) {
        const auto& p = prep[size_t(pi)];
        nn::SensorWindow w = ns_window(p);
        const int64_t nt = p.fields.dim(0);
        const int64_t n_nodes = p.coords.dim(0);
        const int64_t t0 = int64_t(std::ceil(opt.t_start_frac * double(nt - 1)));
        std::vector<int64_t> t_idx;
        for (int64_t it = t0; it < nt; it += opt.time_stride) t_idx.push_back(it);
        std::vector<int64_t> nodes;
        for (int64_t i = 0; i < n_nodes; i += opt.node_stride) nodes.push_back(i);

        // batch all query points for this dataset in one prediction
        Tensor qps(Shape{1, int64_t(t_idx.size() * nodes.size()), 3});
        int64_t r = 0;
        for (int64_t it : t_idx)
            for (int64_t nd : nodes) {
                qps.at3(0, r, 0) = double(it) * p.dt;
                qps.at3(0, r, 1) = p.coords.at2(nd, 0);
                qps.at3(0, r, 2) = p.coords.at2(nd, 1);
                ++r;
            }
        Tensor pred = nn::predict_fields(bundle, {w}, qps);
        for (int var = 0; var < 3; ++var) {
            Tensor truth(Shape{int64_t(t_idx.size()), int64_t(nodes.size())});
            Tensor hat(Shape{int64_t(t_idx.size()), int64_t(nodes.size())});
            r = 0;
            for (size_t a = 0; a < t_idx.size(); ++a)
                for (size_t b = 0; b < nodes.size(); ++b) {
                    truth.at2(int64_t(a), int64_t(b)) = p.fields.at3(t_idx[a], nodes[b], var);
                    hat.at2(int64_t(a), int64_t(b)) = pred.at3(0, r, var);
                    ++r;
                }
            metrics::SnapshotErrors se = metrics::snapshot_errors(truth, hat);
            per[size_t(pi)].mae[var] = metrics::time_mean(se.mae);
            per[size_t(pi)].med[var] = metrics::time_mean(se.median_ae);
            per[size_t(pi)].p90[var] = metrics::time_mean(se.p90_ae);
        }

        // identification accuracy
        Tensor prm = nn::predict_params(bundle, {w});
        per[size_t(pi)].umax_pred = prm.at2(0, 0);
        per[size_t(pi)].f_pred = prm.at2(0, 1);

        // cross-validation on the inlet profile
        phys::NsParams ident_params = p.params;
        ident_params.u_max = prm.at2(0, 0);
        ident_params.freq = prm.at2(0, 1);
        Tensor inlet_qps(Shape{1, opt.inlet_ny * opt.inlet_nt, 3});
        std::vector<double> from_ident, from_truth, from_pinn;
        r = 0;
        for (int64_t yi = 0; yi < opt.inlet_ny; ++yi)
            for (int64_t ti = 0; ti < opt.inlet_nt; ++ti, ++r) {
                const double y = p.params.height * (double(yi) + 0.5) / double(opt.inlet_ny);
                const double t = p.t_final * double(ti) / double(opt.inlet_nt - 1);
                inlet_qps.at3(0, r, 0) = t;
                inlet_qps.at3(0, r, 1) = 0.0;
                inlet_qps.at3(0, r, 2) = y;
                double ux, uy;
                phys::inlet_velocity(t, y, ident_params, ux, uy);
                from_ident.push_back(ux);
                phys::inlet_velocity(t, y, p.params, ux, uy);
                from_truth.push_back(ux);
            }
        Tensor inlet_pred = nn::predict_fields(bundle, {w}, inlet_qps);
        for (int64_t k = 0; k < inlet_qps.dim(1); ++k) from_pinn.push_back(inlet_pred.at3(0, k, 0));
        per[size_t(pi)].cv_model = metrics::scaled_mae(from_ident, from_pinn);
        per[size_t(pi)].cv_comparison = metrics::scaled_mae(from_ident, from_truth);
    });

    std::vector<std::vector<double>> mae_per_var(3), med_per_var(3), p90_per_var(3);
    std::vector<double> umax_true, umax_pred, f_true, f_pred, cv_model, cv_comparison;
    for (size_t i = 0; i < prep.size(); ++i) {
        for (int var = 0; var < 3; ++var) {
            mae_per_var[size_t(var)].push_back(per[i].mae[var]);
            med_per_var[size_t(var)].push_back(per[i].med[var]);
            p90_per_var[size_t(var)].push_back(per[i].p90[var]);
        }
        umax_true.push_back(prep[i].u_max);
        umax_pred.push_back(per[i].umax_pred);
        f_true.push_back(prep[i].freq);
        f_pred.push_back(per[i].f_pred);
        cv_model.push_back(per[i].cv_model);
        cv_comparison.push_back(per[i].cv_comparison);
    }

    out.field_errors.columns = {"variable", "aggregation", "mae", "median_ae", "p90_ae"};
    for (int var = 0; var < 3; ++var) {
        const auto& m = mae_per_var[size_t(var)];
        const auto& md = med_per_var[size_t(var)];
        const auto& p9 = p90_per_var[size_t(var)];
        out.field_errors.rows.push_back({double(var), 0.0, metrics::time_mean(m),
                                         metrics::time_mean(md), metrics::time_mean(p9)});
        out.field_errors.rows.push_back({double(var), 50.0, metrics::percentile(m, 50.0),
                                         metrics::percentile(md, 50.0),
                                         metrics::percentile(p9, 50.0)});
        out.field_errors.rows.push_back({double(var), 90.0, metrics::percentile(m, 90.0),
                                         metrics::percentile(md, 90.0),
                                         metrics::percentile(p9, 90.0)});
    }
    if (prep.size() >= 2) {
        out.r2_umax = metrics::r_squared(umax_true, umax_pred);
        out.r2_f = metrics::r_squared(f_true, f_pred);
    }
    out.crossval.scatter.columns = {"dataset", "smae_model", "smae_comparison"};
    for (size_t i = 0; i < cv_model.size(); ++i)
        out.crossval.scatter.rows.push_back({double(i), cv_model[i], cv_comparison[i]});
    if (cv_model.size() >= 3) out.crossval.r2 = metrics::pearson_r2(cv_model, cv_comparison);
    return out;
}

}  // namespace pinnse::apps
