#include "pinnse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace pinnse::metrics {

double percentile(std::vector<double> values, double q) {
    PINNSE_CHECK(!values.empty(), "percentile: empty vector");
    PINNSE_CHECK(q >= 0.0 && q <= 100.0, "percentile: q out of range");
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * double(values.size() - 1);
    const size_t lo = size_t(std::floor(rank));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - double(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    PINNSE_CHECK(y_true.size() == y_pred.size(), "r_squared: size mismatch");
    PINNSE_CHECK(y_true.size() >= 2, "r_squared: need at least 2 points");
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= double(y_true.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    }
    PINNSE_CHECK(ss_tot > 0.0, "r_squared: constant y_true");
    return 1.0 - ss_res / ss_tot;
}

double mae(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    PINNSE_CHECK(y_true.size() == y_pred.size() && !y_true.empty(), "mae: bad inputs");
    double acc = 0.0;
    for (size_t i = 0; i < y_true.size(); ++i) acc += std::fabs(y_true[i] - y_pred[i]);
    return acc / double(y_true.size());
}

double scaled_mae(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    const auto [lo, hi] = std::minmax_element(y_true.begin(), y_true.end());
    PINNSE_CHECK(*hi > *lo, "scaled_mae: zero-range true signal");
    return 100.0 * mae(y_true, y_pred) / (*hi - *lo);
}

MapeResult mape_ape95(const std::vector<double>& y_true, const std::vector<double>& y_pred,
                      double floor) {
    PINNSE_CHECK(y_true.size() == y_pred.size() && !y_true.empty(), "mape: bad inputs");
    std::vector<double> ape(y_true.size(), 0.0);
    double acc = 0.0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        if (std::fabs(y_true[i]) < floor)
            throw DataError("mape_ape95: near-zero true value; metric undefined");
        ape[i] = 100.0 * std::fabs(y_pred[i] - y_true[i]) / std::fabs(y_true[i]);
        acc += ape[i];
    }
    MapeResult r;
    r.mape = acc / double(ape.size());
    r.ape95 = percentile(ape, 95.0);
    return r;
}

double pearson_r2(const std::vector<double>& xs, const std::vector<double>& ys) {
    PINNSE_CHECK(xs.size() == ys.size() && xs.size() >= 3,
                 "pearson_r2: need at least 3 points");
    const double n = double(xs.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    PINNSE_CHECK(sxx > 0.0 && syy > 0.0, "pearson_r2: degenerate scatter");
    return (sxy * sxy) / (sxx * syy);
}

SnapshotErrors snapshot_errors(const Tensor& field_true, const Tensor& field_pred) {
    PINNSE_CHECK(field_true.rank() == 2 && field_true.shape() == field_pred.shape() &&
                     field_true.numel() > 0,
                 "snapshot_errors: shape mismatch or empty field");
    const int64_t nt = field_true.dim(0), nxy = field_true.dim(1);
    SnapshotErrors out;
    std::vector<double> abs_err(size_t(nxy), 0.0);
    for (int64_t t = 0; t < nt; ++t) {
        double acc = 0.0;
        for (int64_t i = 0; i < nxy; ++i) {
            abs_err[size_t(i)] = std::fabs(field_pred.at2(t, i) - field_true.at2(t, i));
            acc += abs_err[size_t(i)];
        }
        out.mae.push_back(acc / double(nxy));
        out.median_ae.push_back(percentile(abs_err, 50.0));
        out.p90_ae.push_back(percentile(abs_err, 90.0));
    }
    return out;
}

double time_mean(const std::vector<double>& per_snapshot) {
    PINNSE_CHECK(!per_snapshot.empty(), "time_mean: empty series");
    double acc = 0.0;
    for (double v : per_snapshot) acc += v;
    return acc / double(per_snapshot.size());
}

void Report::write_csv(const std::string& path) const {
    std::ofstream f(path);
    PINNSE_CHECK_DATA(f.good(), "cannot write report: " + path);
    for (size_t i = 0; i < columns.size(); ++i) f << (i ? "," : "") << columns[i];
    f << "\n";
    char buf[64];
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            f << (i ? "," : "") << buf;
        }
        f << "\n";
    }
}

void Report::write_json(const std::string& path) const {
    nlohmann::json j;
    j["columns"] = columns;
    j["rows"] = rows;
    std::ofstream f(path);
    PINNSE_CHECK_DATA(f.good(), "cannot write report: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace pinnse::metrics
