#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pinnse/datagen.hpp"
#include "pinnse/rng.hpp"
#include "test_util.hpp"

using namespace pinnse;
using namespace pinnse::data;
using pinnse::testutil::rel_err;

TEST_CASE("sobol matches the reference sequence") {
    // frozen from an independent generator (Joe-Kuo direction numbers,
    // Gray-code order, origin included)
    const double d2_expected[8][2] = {{0, 0},         {0.5, 0.5},     {0.75, 0.25},
                                      {0.25, 0.75},   {0.375, 0.375}, {0.875, 0.875},
                                      {0.625, 0.125}, {0.125, 0.625}};
    SobolSampler s2(2);
    for (auto& row : d2_expected) {
        auto p = s2.next();
        CHECK(p[0] == row[0]);
        CHECK(p[1] == row[1]);
    }

    const double d1_expected[3] = {0.0, 0.5, 0.75};
    SobolSampler s1(1);
    for (double e : d1_expected) CHECK(s1.next()[0] == e);

    const double d3_expected[8][3] = {
        {0, 0, 0},           {0.5, 0.5, 0.5},     {0.75, 0.25, 0.25}, {0.25, 0.75, 0.75},
        {0.375, 0.375, 0.625}, {0.875, 0.875, 0.125}, {0.625, 0.125, 0.875},
        {0.125, 0.625, 0.375}};
    SobolSampler s3(3);
    for (auto& row : d3_expected) {
        auto p = s3.next();
        for (int k = 0; k < 3; ++k) CHECK(p[size_t(k)] == row[k]);
    }

    const double d8_row4[8] = {0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875};
    const double d8_row7[8] = {0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625};
    SobolSampler s8(8);
    for (int i = 0; i < 4; ++i) s8.next();
    auto p4 = s8.next();
    for (int k = 0; k < 8; ++k) CHECK(p4[size_t(k)] == d8_row4[k]);
    s8.next();
    s8.next();
    auto p7 = s8.next();
    for (int k = 0; k < 8; ++k) CHECK(p7[size_t(k)] == d8_row7[k]);
}

TEST_CASE("sobol: determinism and low discrepancy") {
    SobolSampler a(2), b(2);
    for (int i = 0; i < 100; ++i) {
        auto pa = a.next();
        auto pb = b.next();
        CHECK(pa[0] == pb[0]);
        CHECK(pa[1] == pb[1]);
    }
    std::vector<std::vector<double>> sobol_pts, uniform_pts;
    SobolSampler s(2);
    Rng rng(1234);
    for (int i = 0; i < 256; ++i) {
        sobol_pts.push_back(s.next());
        uniform_pts.push_back({rng.uniform(), rng.uniform()});
    }
    CHECK(l2_star_discrepancy(sobol_pts, 2) < l2_star_discrepancy(uniform_pts, 2));
}

TEST_CASE("rossler integration: shape, refinement, self-consistency") {
    phys::RosslerParams p;
    p.c = 5.7;
    RosslerTrajectory t = integrate_rossler(1.0, 1.0, 4.0, p);
    REQUIRE(!t.diverged);
    CHECK(t.states.shape() == Shape{2000, 3});
    CHECK(t.states.all_finite());
    CHECK(t.times[0] == 0.0);
    CHECK(t.times[1999] == doctest::Approx(19.99));

    // order-4 convergence: halving the internal step moves the endpoint < 1e-6
    RosslerTrajectory t2 = integrate_rossler(1.0, 1.0, 4.0, p, 20.0, 0.01, 5e-4);
    double endpoint_shift = 0.0;
    for (int j = 0; j < 3; ++j)
        endpoint_shift = std::max(endpoint_shift,
                                  std::fabs(t.states.at2(1999, j) - t2.states.at2(1999, j)));
    CHECK(endpoint_shift < 1e-6);

    // centered differences along the trajectory reproduce the rhs to O(dt^2)
    double worst = 0.0;
    for (int64_t i = 1; i + 1 < 2000; i += 13) {
        double s[3] = {t.states.at2(i, 0), t.states.at2(i, 1), t.states.at2(i, 2)};
        double rhs[3];
        phys::rossler_rhs(s, p, rhs);
        for (int j = 0; j < 3; ++j) {
            const double fd =
                (t.states.at2(i + 1, j) - t.states.at2(i - 1, j)) / (2.0 * 0.01);
            worst = std::max(worst, std::fabs(fd - rhs[j]));
        }
    }
    CHECK(worst < 0.05);  // |f''| reaches ~1e2 on the z spikes; O(dt^2) ~ 1e-2
}

TEST_CASE("divergent trajectories are flagged") {
    phys::RosslerParams p;
    p.c = 5.7;
    RosslerTrajectory t = integrate_rossler(500.0, 500.0, 4.0, p, 20.0, 0.01, 1e-3, 1e3);
    CHECK(t.diverged);
}

TEST_CASE("noise model follows the printed sigma") {
    phys::RosslerParams p;
    RosslerTrajectory t = integrate_rossler(1.0, 1.0, 4.0, p);
    NoiseSpec spec{0.10, 99, false};
    Tensor noisy = add_noise(t.states, spec);

    // alpha = 0 is the identity
    Tensor same = add_noise(t.states, NoiseSpec{0.0, 99, false});
    for (int64_t i = 0; i < same.numel(); ++i) CHECK(same[i] == t.states[i]);

    const int64_t n = t.states.dim(0);
    for (int64_t j = 0; j < 3; ++j) {
        double ss = 0.0;
        for (int64_t i = 0; i < n; ++i) ss += t.states.at2(i, j) * t.states.at2(i, j);
        const double sigma = 0.10 * std::sqrt(ss) / double(n);
        double var = 0.0, mean = 0.0;
        for (int64_t i = 0; i < n; ++i) mean += noisy.at2(i, j) - t.states.at2(i, j);
        mean /= double(n);
        for (int64_t i = 0; i < n; ++i) {
            const double d = noisy.at2(i, j) - t.states.at2(i, j) - mean;
            var += d * d;
        }
        const double emp = std::sqrt(var / double(n - 1));
        CHECK(rel_err(emp, sigma) < 0.05);
    }
    // channel independence
    double cxy = 0, sx = 0, sy = 0;
    for (int64_t i = 0; i < n; ++i) {
        const double ex = noisy.at2(i, 0) - t.states.at2(i, 0);
        const double ey = noisy.at2(i, 1) - t.states.at2(i, 1);
        cxy += ex * ey;
        sx += ex * ex;
        sy += ey * ey;
    }
    CHECK(std::fabs(cxy / std::sqrt(sx * sy)) < 0.1);
}

TEST_CASE("window extraction: grid, expanding prefix, all sizes") {
    phys::RosslerParams p;
    RosslerTrajectory t = integrate_rossler(0.5, -0.5, 4.0, p);
    nn::SensorWindow w15 = extract_window(t.times, t.states, 0.5, 15);
    CHECK(w15.rows.dim(0) == 15);
    for (int i = 0; i < 15; ++i) CHECK(w15.rows.at2(i, 0) == doctest::Approx(0.5 * i));
    nn::SensorWindow w20 = extract_window(t.times, t.states, 0.5, 20);
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < 4; ++j) CHECK(w15.rows.at2(i, j) == w20.rows.at2(i, j));
    for (int n : {15, 20, 25, 30, 35, 40})
        CHECK_NOTHROW(extract_window(t.times, t.states, 0.5, n));
    CHECK_THROWS_AS(extract_window(t.times, t.states, 0.5, 41), ConfigError);
}

TEST_CASE("heat solver: exact equilibrium and causality of the power drop") {
    HeatSimConfig cfg;
    cfg.params.q0_over_k = 0.0;
    cfg.params.qL_over_k = 0.0;
    cfg.t00 = cfg.params.t_inf;
    cfg.t0L = cfg.params.t_inf;
    cfg.t_final = 10.0;
    HeatField f = heat_solve(cfg);
    for (int64_t i = 0; i < f.field.numel(); ++i) CHECK(f.field[i] == cfg.params.t_inf);

    // drop variant equals no-drop for t < t_pdb
    HeatSimConfig hot;
    hot.params.t_pdb = 6.0;
    hot.t00 = 24.0;
    hot.t0L = 28.0;
    hot.t_final = 12.0;
    HeatField a = heat_solve(hot);
    hot.with_drop = true;
    HeatField b = heat_solve(hot);
    for (int64_t it = 0; it < a.times.numel(); ++it) {
        if (a.times[it] >= 6.0) break;
        for (int64_t j = 0; j < a.xs.numel(); ++j)
            CHECK(a.field.at2(it, j) == b.field.at2(it, j));
    }
    // after the drop the bottom face must diverge from the no-drop run
    CHECK(std::fabs(a.field.at2(a.times.numel() - 1, a.xs.numel() - 1) -
                    b.field.at2(a.times.numel() - 1, a.xs.numel() - 1)) > 0.5);
}

TEST_CASE("heat solver: first order in dt, second order in dx") {
    HeatSimConfig base;
    base.t00 = 23.0;
    base.t0L = 29.0;
    base.t_final = 5.0;
    base.nx = 96;
    base.dt = 0.2;

    auto final_profile = [&](double dt, int nx) {
        HeatSimConfig c = base;
        c.dt = dt;
        c.nx = nx;
        HeatField f = heat_solve(c);
        std::vector<double> prof;
        // sample both faces and the midpoint so refinements are comparable
        prof.push_back(f.field.at2(f.times.numel() - 1, 0));
        prof.push_back(f.field.at2(f.times.numel() - 1, nx / 2));
        prof.push_back(f.field.at2(f.times.numel() - 1, nx));
        return prof;
    };

    // temporal refinement against a fine-step reference
    auto ref = final_profile(0.0125, 96);
    auto c1 = final_profile(0.2, 96);
    auto c2 = final_profile(0.1, 96);
    double e1 = 0, e2 = 0;
    for (size_t i = 0; i < ref.size(); ++i) {
        e1 = std::max(e1, std::fabs(c1[i] - ref[i]));
        e2 = std::max(e2, std::fabs(c2[i] - ref[i]));
    }
    const double rate_t = e1 / e2;
    CHECK(rate_t > 1.6);  // ~2 for first order
    CHECK(rate_t < 2.6);

    // spatial refinement against a fine-grid reference at fixed small dt
    auto refx = final_profile(0.025, 192);
    auto x1 = final_profile(0.025, 24);
    auto x2 = final_profile(0.025, 48);
    double ex1 = 0, ex2 = 0;
    for (size_t i = 0; i < refx.size(); ++i) {
        ex1 = std::max(ex1, std::fabs(x1[i] - refx[i]));
        ex2 = std::max(ex2, std::fabs(x2[i] - refx[i]));
    }
    CHECK(ex1 / ex2 > 3.0);  // ~4 for second order
}

TEST_CASE("heat window: uniform grid, power step, static thickness") {
    HeatSimConfig cfg;
    cfg.t00 = 24.0;
    cfg.t0L = 26.0;
    cfg.with_drop = true;
    cfg.params.t_pdb = 7.0;
    cfg.t_final = 20.0;
    HeatField f = heat_solve(cfg);
    HeatWindowSpec spec;
    spec.jitter_lo = spec.jitter_hi = 2.0;  // zero jitter
    std::vector<double> times = acquisition_times(cfg.t_final, spec);
    for (size_t i = 0; i < times.size(); ++i) CHECK(times[i] == doctest::Approx(2.0 * i));
    nn::SensorWindow w = heat_window(f, cfg, times, NoiseSpec{0.0, 0, false});
    for (int64_t i = 0; i < w.rows.dim(0); ++i) {
        CHECK(w.rows.at2(i, 3) == 100.0);
        CHECK(w.rows.at2(i, 4) == (w.rows.at2(i, 0) >= 7.0 ? 0.0 : 100.0));
    }
    CHECK(w.statics.size() == 1);
    CHECK(w.statics[0] == cfg.params.thickness);
}

TEST_CASE("dataset container round-trip is identity") {
    Dataset ds;
    ds.app = "rossler";
    Tensor arr(Shape{3, 2}, {1.5, -2.25, 3.0, 0.0, 1e-300, 12345.6789});
    ds.set_array("payload", arr);
    ds.set_scalar("c", 5.7);
    ds.meta.emplace_back("note", "unit");
    const std::string path = "/tmp/pinnse_test_roundtrip.psed";
    write_dataset(ds, path);
    Dataset back = read_dataset(path);
    CHECK(back.app == "rossler");
    CHECK(back.scalar("c") == 5.7);
    const Tensor& a2 = back.array("payload");
    CHECK(a2.shape() == arr.shape());
    for (int64_t i = 0; i < arr.numel(); ++i) CHECK(a2[i] == arr[i]);
    std::remove(path.c_str());
}

TEST_CASE("ns toy dataset: ingest, sensors, mass conservation") {
    NsToyConfig cfg;
    cfg.nx = 12;
    cfg.ny = 8;
    cfg.params.u_max = 0.2;
    cfg.params.freq = 2.0;
    Dataset ds = make_ns_toy_dataset(cfg);
    const std::string path = "/tmp/pinnse_test_ns.psed";
    write_dataset(ds, path);
    Dataset back = ingest_ns_dataset(path);
    CHECK(back.scalar("U_max") == 0.2);
    const Tensor& f1 = ds.array("fields");
    const Tensor& f2 = back.array("fields");
    for (int64_t i = 0; i < f1.numel(); i += 17) CHECK(f1[i] == f2[i]);

    // sensor extraction equals direct field lookup
    Tensor traces = ns_sensor_traces(back);
    const Tensor& coords = back.array("coords");
    const Tensor& sensors = back.array("sensor_coords");
    for (int64_t s = 0; s < sensors.dim(0); ++s) {
        int64_t node = -1;
        for (int64_t i = 0; i < coords.dim(0); ++i)
            if (coords.at2(i, 0) == sensors.at2(s, 0) && coords.at2(i, 1) == sensors.at2(s, 1))
                node = i;
        REQUIRE(node >= 0);
        CHECK(traces.at2(3, s) == f2.at3(3, node, 2));
    }
    std::remove(path.c_str());

    // manufactured velocity is divergence-free (analytic spot check by
    // central differences on a fine stencil)
    const phys::NsParams& p = cfg.params;
    auto uv = [&](double x, double y, double t, int comp) {
        const double pi = 3.14159265358979323846;
        const double U = phys::inlet_u_of_t(t, p);
        const double Q = std::cos(pi * x / (2 * p.length));
        const double Qp = -pi / (2 * p.length) * std::sin(pi * x / (2 * p.length));
        const double Pp = 4 * y * (p.height - y) / (p.height * p.height);
        const double P = 2 * y * y / p.height - 4 * y * y * y / (3 * p.height * p.height);
        return comp == 0 ? U * Q * Pp : -U * Qp * P;
    };
    const double h = 1e-6, x0 = 0.2, y0 = 0.1, t0 = 2.0;
    const double div = (uv(x0 + h, y0, t0, 0) - uv(x0 - h, y0, t0, 0)) / (2 * h) +
                       (uv(x0, y0 + h, t0, 1) - uv(x0, y0 - h, t0, 1)) / (2 * h);
    CHECK(std::fabs(div) < 1e-6);
}

TEST_CASE("campaigns: counts, ranges, splits, determinism") {
    RosslerCampaignConfig rc;
    rc.n_datasets = 12;
    rc.train_frac = 9.0 / 12.0;
    rc.val_frac = 1.5 / 12.0;
    CampaignResult a = sample_rossler_campaign(rc);
    CampaignResult b = sample_rossler_campaign(rc);
    CHECK(a.datasets.size() == 12);
    int train = 0, val = 0, test = 0;
    for (const auto& s : a.manifest.splits) {
        if (s == "train") ++train;
        if (s == "val") ++val;
        if (s == "test") ++test;
    }
    CHECK(train == 9);
    CHECK(val == 2);
    CHECK(test == 1);
    for (size_t i = 0; i < a.datasets.size(); ++i) {
        CHECK(a.datasets[i].scalar("c") >= rc.c_lo);
        CHECK(a.datasets[i].scalar("c") <= rc.c_hi);
        CHECK(a.datasets[i].scalar("c") == b.datasets[i].scalar("c"));
        CHECK(a.manifest.splits[i] == b.manifest.splits[i]);
        CHECK(a.datasets[i].array("noisy").all_finite());
    }

    HeatCampaignConfig hc;
    hc.n_points = 4;
    CampaignResult h = sample_heat_campaign(hc);
    CHECK(h.datasets.size() == 8);  // paired drop / no-drop
    for (size_t i = 0; i < h.datasets.size(); i += 2) {
        CHECK(h.datasets[i].scalar("with_drop") == 0.0);
        CHECK(h.datasets[i + 1].scalar("with_drop") == 1.0);
        CHECK(h.manifest.splits[i] == h.manifest.splits[i + 1]);
        CHECK(h.datasets[i].scalar("alpha") == h.datasets[i + 1].scalar("alpha"));
        CHECK(h.datasets[i].scalar("alpha") >= hc.alpha_lo);
        CHECK(h.datasets[i].scalar("alpha") <= hc.alpha_hi);
        CHECK(h.datasets[i].scalar("thickness") >= hc.thick_lo);
        CHECK(h.datasets[i].scalar("thickness") <= hc.thick_hi);
    }

    // manifest write/read round trip
    std::filesystem::create_directories("/tmp/pinnse_test_campaign");
    write_campaign(a, "/tmp/pinnse_test_campaign");
    Manifest m = read_manifest("/tmp/pinnse_test_campaign/manifest.json");
    CHECK(m.files.size() == a.manifest.files.size());
    CHECK(m.files_in_split("train").size() == 9);
    Dataset d0 = read_dataset("/tmp/pinnse_test_campaign/" + m.files[0]);
    CHECK(d0.scalar("c") == a.datasets[0].scalar("c"));
    std::filesystem::remove_all("/tmp/pinnse_test_campaign");
}
