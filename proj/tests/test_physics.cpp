#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pinnse/drivers.hpp"
#include "pinnse/physics.hpp"
#include "test_util.hpp"

using namespace pinnse;
using phys::NsFieldDerivs;
using phys::NsParams;
using phys::RosslerParams;
using pinnse::testutil::rel_err;

TEST_CASE("rossler_rhs: direct substitution") {
    RosslerParams p;  // a = b = 0.2, c = 5.7
    double out[3];
    double s0[3] = {0, 0, 0};
    phys::rossler_rhs(s0, p, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == doctest::Approx(0.2));

    double s1[3] = {1, 1, 1};
    phys::rossler_rhs(s1, p, out);
    CHECK(out[0] == doctest::Approx(-2.0));
    CHECK(out[1] == doctest::Approx(1.2));
    CHECK(out[2] == doctest::Approx(0.2 + 1.0 * (1.0 - 5.7)));  // -4.5

    double s2[3] = {0, -1, 1};
    phys::rossler_rhs(s2, p, out);
    CHECK(out[0] == 0.0);  // y + z = 0
}

TEST_CASE("inlet velocity: closed-form checks") {
    NsParams p;
    p.u_max = 0.7;
    p.freq = 2.5;
    double ux, uy;
    phys::inlet_velocity(0.0, 0.1, p, ux, uy);
    CHECK(ux == 0.0);
    CHECK(uy == 0.0);
    phys::inlet_velocity(1.3, 0.0, p, ux, uy);
    CHECK(ux == 0.0);
    phys::inlet_velocity(1.3, p.height, p, ux, uy);
    CHECK(ux == doctest::Approx(0.0));
    // y = H/2, t = f: parabola peak, sin(pi)^2 = 0 -> u_x = U_max * f
    phys::inlet_velocity(p.freq, p.height / 2, p, ux, uy);
    CHECK(rel_err(ux, p.u_max * p.freq) < 1e-12);
    CHECK(uy == 0.0);
}

namespace {

NsFieldDerivs fill_same(const Tensor& t) {
    NsFieldDerivs f;
    f.u = f.v = f.u_t = f.u_x = f.u_y = f.u_xx = f.u_yy = t;
    f.v_t = f.v_x = f.v_y = f.v_xx = f.v_yy = f.p_x = f.p_y = t;
    return f;
}

}  // namespace

TEST_CASE("ns_residual: constant and shear fields vanish") {
    NsParams p;
    {
        NsFieldDerivs f = fill_same(Tensor::zeros({4}));
        f.u = Tensor::full({4}, 1.3);
        f.v = Tensor::full({4}, -0.4);
        // all derivatives zero
        phys::NsResidual r = phys::ns_residual(f, p);
        for (int64_t i = 0; i < 4; ++i) {
            CHECK(r.mom_x[i] == 0.0);
            CHECK(r.mom_y[i] == 0.0);
            CHECK(r.mass[i] == 0.0);
        }
    }
    {
        // u = y, v = 0, p = 0, steady: u_y = 1, everything else zero
        NsFieldDerivs f = fill_same(Tensor::zeros({1}));
        f.u = Tensor::full({1}, 0.7);  // value of y at the probe point
        f.u_y = Tensor::full({1}, 1.0);
        phys::NsResidual r = phys::ns_residual(f, p);
        // v = 0 multiplies u_y; u_x = 0 so mass = 0; u_yy = 0
        CHECK(r.mom_x[0] == 0.0);
        CHECK(r.mom_y[0] == 0.0);
        CHECK(r.mass[0] == 0.0);
    }
}

TEST_CASE("ns_residual: manufactured solution matches symbolic evaluation") {
    // u = sin(x) cos(y) g(t), v = -cos(x) sin(y) g(t), p = sin(x+y) g(t)
    NsParams prm;
    auto g = [](double t) { return 1.0 + 0.5 * t; };
    auto gp = [](double) { return 0.5; };
    const double t = 0.37, x = 0.81, y = -0.23;
    NsFieldDerivs f = fill_same(Tensor::zeros({1}));
    f.u = Tensor::full({1}, std::sin(x) * std::cos(y) * g(t));
    f.v = Tensor::full({1}, -std::cos(x) * std::sin(y) * g(t));
    f.u_t = Tensor::full({1}, std::sin(x) * std::cos(y) * gp(t));
    f.u_x = Tensor::full({1}, std::cos(x) * std::cos(y) * g(t));
    f.u_y = Tensor::full({1}, -std::sin(x) * std::sin(y) * g(t));
    f.u_xx = Tensor::full({1}, -std::sin(x) * std::cos(y) * g(t));
    f.u_yy = Tensor::full({1}, -std::sin(x) * std::cos(y) * g(t));
    f.v_t = Tensor::full({1}, -std::cos(x) * std::sin(y) * gp(t));
    f.v_x = Tensor::full({1}, std::sin(x) * std::sin(y) * g(t));
    f.v_y = Tensor::full({1}, -std::cos(x) * std::cos(y) * g(t));
    f.v_xx = Tensor::full({1}, std::cos(x) * std::sin(y) * g(t));
    f.v_yy = Tensor::full({1}, std::cos(x) * std::sin(y) * g(t));
    f.p_x = Tensor::full({1}, std::cos(x + y) * g(t));
    f.p_y = Tensor::full({1}, std::cos(x + y) * g(t));

    phys::NsResidual r = phys::ns_residual(f, prm);
    // independent symbolic evaluation of the same expressions
    const double G = g(t), Gp = gp(t);
    const double sym_mx = std::sin(x) * std::cos(y) * Gp +
                          (std::sin(x) * std::cos(y) * G) * (std::cos(x) * std::cos(y) * G) +
                          (-std::cos(x) * std::sin(y) * G) * (-std::sin(x) * std::sin(y) * G) +
                          std::cos(x + y) * G / prm.rho -
                          prm.nu * (-2.0 * std::sin(x) * std::cos(y) * G);
    const double sym_my = -std::cos(x) * std::sin(y) * Gp +
                          (std::sin(x) * std::cos(y) * G) * (std::sin(x) * std::sin(y) * G) +
                          (-std::cos(x) * std::sin(y) * G) * (-std::cos(x) * std::cos(y) * G) +
                          std::cos(x + y) * G / prm.rho -
                          prm.nu * (2.0 * std::cos(x) * std::sin(y) * G);
    CHECK(std::fabs(r.mom_x[0] - sym_mx) < 1e-8);
    CHECK(std::fabs(r.mom_y[0] - sym_my) < 1e-8);
    CHECK(std::fabs(r.mass[0]) < 1e-15);  // divergence-free by construction
}

TEST_CASE("heat residuals: equilibrium and matched fluxes") {
    phys::HeatParams p;
    p.q0_over_k = 0;
    p.qL_over_k = 0;
    // T == T_inf everywhere, q = 0 -> all residuals zero
    Tensor zero = Tensor::zeros({3});
    Tensor r = phys::heat_pde_residual(zero, zero, p.alpha);
    for (int64_t i = 0; i < 3; ++i) CHECK(r[i] == 0.0);
    CHECK(phys::heat_bc0_residual(p.t_inf, 0.0, p, 0.0) == 0.0);
    CHECK(phys::heat_bcL_residual(p.t_inf, 0.0, p, 0.0, phys::RobinSign::as_printed) == 0.0);
    CHECK(phys::heat_bcL_residual(p.t_inf, 0.0, p, 0.0, phys::RobinSign::influx_positive) ==
          0.0);

    // steady linear profile: T_t = 0, T_xx = 0 -> r_pde = 0 regardless of A, B
    Tensor tt = Tensor::zeros({5});
    Tensor txx = Tensor::zeros({5});
    Tensor rp = phys::heat_pde_residual(tt, txx, p.alpha);
    for (int64_t i = 0; i < 5; ++i) CHECK(rp[i] == 0.0);

    // matching fluxes at x = 0: -k A = q0 - h (T0 - Tinf) -> residual 0
    const double A = -3.0, T0 = p.t_inf + 4.0;
    const double q0 = -p.k * A + p.h * (T0 - p.t_inf);
    CHECK(std::fabs(phys::heat_bc0_residual(T0, A, p, q0)) < 1e-12);
}

TEST_CASE("heat residual invariant under joint T and T_inf shift") {
    phys::HeatParams p;
    const double shift = 37.0;
    phys::HeatParams p2 = p;
    p2.t_inf += shift;
    const double T = 60.0, Tx = -1500.0, q = 4.0e3;
    CHECK(phys::heat_bc0_residual(T, Tx, p, q) ==
          doctest::Approx(phys::heat_bc0_residual(T + shift, Tx, p2, q)).epsilon(1e-14));
    // PDE residual does not see T at all, only derivatives
}

TEST_CASE("rossler loss: weight gating and dual-route value agreement") {
    using namespace apps;
    nn::BundleSpec spec = rossler_bundle_spec(8, 2, 2);
    nn::ModelBundle bundle = nn::make_bundle(spec, 42);

    data::RosslerCampaignConfig cc;
    cc.n_datasets = 2;
    cc.seed = 5;
    data::CampaignResult camp = data::sample_rossler_campaign(cc);
    std::vector<RosslerPrepared> prep;
    for (const auto& d : camp.datasets) prep.push_back(prepare_rossler(d));
    std::vector<const RosslerPrepared*> sets{&prep[0], &prep[1]};

    Rng rng(3);
    phys::RosslerBatch batch = make_rossler_batch(sets, 16, rng);
    std::vector<nn::SensorWindow> windows{rossler_window(prep[0], 20, true),
                                          rossler_window(prep[1], 25, true)};

    // lambda = 0, beta = 0 -> total equals L_sup
    {
        ad::Tape tape(nn::app_layout("rossler"));
        nn::TapeModel model = nn::begin_model(tape, bundle, nn::pack_windows(windows));
        phys::LossParts parts =
            phys::build_rossler_loss(tape, bundle, model, batch, {0.0, 0.0});
        CHECK(parts.value("total") == parts.value("L_sup"));
    }

    // dual route: the tape-evaluated parts match a recomputation from the
    // public prediction API
    ad::Tape tape(nn::app_layout("rossler"));
    nn::TapeModel model = nn::begin_model(tape, bundle, nn::pack_windows(windows));
    phys::LossParts parts = phys::build_rossler_loss(tape, bundle, model, batch, {0.5, 1.0});

    Tensor sup_pred = nn::predict_fields(bundle, windows, batch.sup_qps);
    double l_sup = 0.0;
    for (int64_t i = 0; i < sup_pred.numel(); ++i)
        l_sup += std::fabs(sup_pred[i] - batch.sup_labels[i]);
    l_sup /= double(sup_pred.numel());
    CHECK(rel_err(parts.value("L_sup"), l_sup) < 1e-12);

    Tensor ode_pred = nn::predict_fields(bundle, windows, batch.ode_qps);
    Tensor dpred = nn::predict_field_derivative(bundle, windows, batch.ode_qps, 0, 1);
    const int64_t b = 2, nc = 16;
    double l1 = 0, l2 = 0, l3 = 0;
    for (int64_t s = 0; s < b; ++s)
        for (int64_t i = 0; i < nc; ++i) {
            const double x = ode_pred.at3(s, i, 0), y = ode_pred.at3(s, i, 1),
                         z = ode_pred.at3(s, i, 2);
            const double xd = dpred.at3(s, i, 0), yd = dpred.at3(s, i, 1),
                         zd = dpred.at3(s, i, 2);
            l1 += std::fabs(xd + y + z);
            l2 += std::fabs(yd - x - batch.phys.a * y);
            l3 += std::fabs(zd - batch.phys.b - z * (x - batch.c_true[s]));
        }
    const double l_ode = (l1 + l2 + l3) / double(b * nc);
    CHECK(rel_err(parts.value("L_ODE"), l_ode) < 1e-10);
}

TEST_CASE("ns loss: pressure shift leaves physics residual unchanged") {
    using namespace apps;
    nn::BundleSpec spec = ns_bundle_spec(8, 8, 1);
    nn::ModelBundle bundle = nn::make_bundle(spec, 11);

    data::NsCampaignConfig cc;
    cc.n_datasets = 1;
    cc.nx = 8;
    cc.ny = 6;
    data::CampaignResult camp = data::sample_ns_campaign(cc);
    NsPrepared prep = prepare_ns(camp.datasets[0]);
    NsBatchConfig bcfg;
    bcfg.n_colloc = 16;
    bcfg.n_p_locs = 4;
    bcfg.n_p_times = 2;
    bcfg.n_vel_times = 2;
    bcfg.n_inlet_y = 2;
    bcfg.n_inlet_times = 2;
    bcfg.n_ic = 4;
    bcfg.n_bc = 6;
    NsSupervisionPool pool = make_ns_pool(prep, bcfg, 1);

    auto pde_part = [&](const nn::ModelBundle& bnd) {
        std::vector<const NsPrepared*> sets{&prep};
        std::vector<const NsSupervisionPool*> pools{&pool};
        Rng rng(9);
        phys::NsBatch batch = make_ns_batch(sets, pools, bcfg, rng);
        ad::Tape tape(nn::app_layout("ns"));
        std::vector<nn::SensorWindow> windows{ns_window(prep)};
        nn::TapeModel model = nn::begin_model(tape, bnd, nn::pack_windows(windows));
        phys::LossParts parts = phys::build_ns_loss(tape, bnd, model, batch, {10, 0.5, 0.1});
        return parts;
    };

    phys::LossParts base = pde_part(bundle);
    nn::ModelBundle shifted = bundle;
    // add a constant to the pressure output via the head's final bias
    Tensor& bias = shifted.tensor("head0.b4");
    bias[2] += 2.5;
    phys::LossParts moved = pde_part(shifted);
    CHECK(rel_err(base.value("L_PDE"), moved.value("L_PDE"), 1e-14) < 1e-9);
    CHECK(base.value("L_sup") != moved.value("L_sup"));  // pressure data does see the shift
}

TEST_CASE("crossval residual: exact trajectory gives near-zero residual") {
    // independent check of the diagnostic formula on integrator output
    phys::RosslerParams p;
    p.c = 5.2;
    data::RosslerTrajectory traj = data::integrate_rossler(1.0, 2.0, 4.0, p);
    REQUIRE(!traj.diverged);
    // centered finite differences for zdot on the fine grid
    double acc = 0.0;
    int64_t count = 0;
    for (int64_t i = 1; i + 1 < traj.states.dim(0); i += 7) {
        const double zd =
            (traj.states.at2(i + 1, 2) - traj.states.at2(i - 1, 2)) / (2.0 * 0.01);
        const double x = traj.states.at2(i, 0), z = traj.states.at2(i, 2);
        acc += std::fabs(zd - p.b - z * (x - p.c));
        ++count;
    }
    CHECK(acc / double(count) < 5e-3);  // O(dt^2) with dt = 0.01 and |z'''| up to ~1e2

    // perturbing c by delta adds |z * delta| pointwise
    const double delta = 0.3;
    const double x = 2.0, z = 1.7, zd = p.b + z * (x - p.c);
    const double r0 = std::fabs(zd - p.b - z * (x - p.c));
    const double r1 = std::fabs(zd - p.b - z * (x - (p.c + delta)));
    CHECK(rel_err(r1 - r0, std::fabs(z * delta)) < 1e-12);
}
