#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pinnse/metrics.hpp"
#include "pinnse/rng.hpp"
#include "test_util.hpp"

using namespace pinnse;
using namespace pinnse::metrics;
using pinnse::testutil::rel_err;

TEST_CASE("r_squared: exact, mean predictor, hand value") {
    std::vector<double> y{1, 2, 3};
    CHECK(r_squared(y, y) == 1.0);
    std::vector<double> mean_pred{2, 2, 2};
    CHECK(r_squared(y, mean_pred) == doctest::Approx(0.0));
    std::vector<double> pred{1, 2, 4};
    CHECK(r_squared(y, pred) == doctest::Approx(0.5));
    CHECK_THROWS_AS(r_squared({1, 1}, {1, 2}), ConfigError);
    CHECK_THROWS_AS(r_squared({1}, {1}), ConfigError);
}

TEST_CASE("scaled_mae: exact, hand value, affine invariance") {
    std::vector<double> y{0, 1, 2};
    CHECK(scaled_mae(y, y) == 0.0);
    std::vector<double> pred{0, 1, 3};
    CHECK(rel_err(scaled_mae(y, pred), 100.0 * (1.0 / 3.0) / 2.0) < 1e-12);

    Rng rng(3);
    std::vector<double> a(20), b(20), a2(20), b2(20);
    for (size_t i = 0; i < 20; ++i) {
        a[i] = rng.uniform(-5, 5);
        b[i] = rng.uniform(-5, 5);
        a2[i] = 3.7 * a[i] - 11.0;
        b2[i] = 3.7 * b[i] - 11.0;
    }
    CHECK(rel_err(scaled_mae(a, b), scaled_mae(a2, b2)) < 1e-12);
    CHECK_THROWS_AS(scaled_mae({2, 2}, {1, 2}), ConfigError);
}

TEST_CASE("percentile: linear interpolation convention") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(percentile(v, 50.0) == doctest::Approx(5.5));
    CHECK(percentile(v, 90.0) == doctest::Approx(9.1));
    CHECK(percentile(v, 0.0) == 1.0);
    CHECK(percentile(v, 100.0) == 10.0);
}

TEST_CASE("percentile matches a sort-based oracle on random vectors") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const size_t n = 2 + rng.below(40);
        std::vector<double> v(n);
        for (double& x : v) x = rng.uniform(-100, 100);
        const double q = rng.uniform(0, 100);

        // independent oracle: sort, then interpolate between order statistics
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const double pos = q / 100.0 * double(n - 1);
        const size_t lo = size_t(pos);
        const size_t hi = std::min(n - 1, lo + 1);
        const double expect = sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);

        CHECK(rel_err(percentile(v, q), expect, 1e-9) < 1e-12);
    }
}

TEST_CASE("mape and ape95") {
    MapeResult r = mape_ape95({100.0, 100.0, 100.0}, {100.0, 100.0, 100.0});
    CHECK(r.mape == 0.0);
    CHECK(r.ape95 == 0.0);
    MapeResult r2 = mape_ape95({100.0}, {110.0});
    CHECK(r2.mape == doctest::Approx(10.0));
    CHECK(r2.ape95 == doctest::Approx(10.0));

    Rng rng(5);
    std::vector<double> t(50), p(50);
    for (size_t i = 0; i < 50; ++i) {
        t[i] = rng.uniform(10, 100);
        p[i] = t[i] + rng.uniform(-5, 5);
    }
    MapeResult r3 = mape_ape95(t, p);
    double max_ape = 0;
    for (size_t i = 0; i < 50; ++i)
        max_ape = std::max(max_ape, 100.0 * std::fabs(p[i] - t[i]) / t[i]);
    CHECK(r3.ape95 <= max_ape + 1e-12);
    CHECK_THROWS_AS(mape_ape95({1e-9}, {1.0}), DataError);
}

TEST_CASE("snapshot errors and time mean") {
    Tensor truth(Shape{2, 10});
    Tensor pred(Shape{2, 10});
    for (int64_t i = 0; i < 10; ++i) {
        truth.at2(0, i) = 0.0;
        pred.at2(0, i) = double(i + 1);  // abs err 1..10
        truth.at2(1, i) = 5.0;
        pred.at2(1, i) = 5.0;
    }
    SnapshotErrors e = snapshot_errors(truth, pred);
    CHECK(e.median_ae[0] == doctest::Approx(5.5));
    CHECK(e.p90_ae[0] == doctest::Approx(9.1));
    CHECK(e.mae[0] == doctest::Approx(5.5));
    CHECK(e.mae[1] == 0.0);
    CHECK(e.median_ae[0] <= e.p90_ae[0]);
    CHECK(time_mean(e.mae) == doctest::Approx(2.75));
    CHECK(time_mean({3.3, 3.3, 3.3}) == doctest::Approx(3.3));
    CHECK_THROWS_AS(snapshot_errors(Tensor(Shape{2, 3}), Tensor(Shape{3, 2})), ConfigError);
}

TEST_CASE("pearson r2: perfect line and row counts") {
    std::vector<double> xs{1, 2, 3, 4}, ys{2, 4, 6, 8};
    CHECK(pearson_r2(xs, ys) == doctest::Approx(1.0));
    std::vector<double> neg{-2, -4, -6, -8};
    CHECK(pearson_r2(xs, neg) == doctest::Approx(1.0));  // r^2 of a negative slope
    CHECK_THROWS_AS(pearson_r2({1, 2}, {1, 2}), ConfigError);
}

TEST_CASE("report writers") {
    Report rep;
    rep.columns = {"window", "r2"};
    rep.rows = {{15, 0.91}, {25, 0.97}};
    rep.write_csv("/tmp/pinnse_report.csv");
    rep.write_json("/tmp/pinnse_report.json");
    std::ifstream f("/tmp/pinnse_report.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "window,r2");
    std::getline(f, line);
    CHECK(line.rfind("15,", 0) == 0);
    std::remove("/tmp/pinnse_report.csv");
    std::remove("/tmp/pinnse_report.json");
}
