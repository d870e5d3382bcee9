#pragma once

#include <string>
#include <vector>

#include "pinnse/tensor.hpp"

namespace pinnse::metrics {

/// Percentile with linear interpolation between order statistics; q in
/// [0, 100]. The single shared convention for every percentile in the suite.
double percentile(std::vector<double> values, double q);

/// 1 - SS_res / SS_tot. Throws on fewer than 2 points or constant y_true.
double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred);

double mae(const std::vector<double>& y_true, const std::vector<double>& y_pred);

/// 100 * MAE / (max(y_true) - min(y_true)). Throws on zero range.
double scaled_mae(const std::vector<double>& y_true, const std::vector<double>& y_pred);

struct MapeResult {
    double mape = 0;
    double ape95 = 0;
};

/// Percentage errors with a |y_true| floor; values below the floor reject
/// the dataset rather than being clipped.
MapeResult mape_ape95(const std::vector<double>& y_true, const std::vector<double>& y_pred,
                      double floor = 1e-6);

/// Squared Pearson correlation of a scatter.
double pearson_r2(const std::vector<double>& xs, const std::vector<double>& ys);

struct SnapshotErrors {
    std::vector<double> mae;       // per snapshot
    std::vector<double> median_ae;
    std::vector<double> p90_ae;
};

/// Per-snapshot spatial reductions of |pred - true|; fields are [Nt, Nxy].
SnapshotErrors snapshot_errors(const Tensor& field_true, const Tensor& field_pred);

double time_mean(const std::vector<double>& per_snapshot);

/// Tabular report emitted as CSV and JSON side by side.
struct Report {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    void write_csv(const std::string& path) const;
    void write_json(const std::string& path) const;
};

}  // namespace pinnse::metrics
