#pragma once

#include <vector>

#include "pinnse/drivers.hpp"
#include "pinnse/metrics.hpp"

namespace pinnse::apps {

/// Window-size x noise sweep: identification R^2 and scaled-MAE statistics
/// of the trajectory predictions across datasets.
/// Columns: window, noise, r2_c, then per state {x,y,z}: scaled-MAE mean,
/// median, p90 across datasets.
metrics::Report rossler_eval(const nn::ModelBundle& bundle,
                             const std::vector<data::Dataset>& sets,
                             const std::vector<int>& window_sizes,
                             const std::vector<double>& noise_levels, int n_threads = 1);

struct CrossvalScatter {
    metrics::Report scatter;  // per-dataset rows
    double r2 = 0.0;          // correlation of the default residual vs MAE_z
    double r2_printed = 0.0;  // using the residual sign exactly as printed
};

/// Cross-validation diagnostic: per-dataset (MAE_z, L_ODE_z) pairs at one
/// window size, plus the squared correlation.
CrossvalScatter rossler_crossval(const nn::ModelBundle& bundle,
                                 const std::vector<data::Dataset>& sets, int window_size,
                                 bool noisy);

struct HeatEvalOptions {
    std::vector<int> window_sizes = {5, 10, 15, 20, 25, 30};
    std::vector<double> positions = {0.0, 0.25, 0.5, 0.75, 1.0};  // fractions of L
    std::vector<double> time_ranges = {5.0, 10.0, 20.0, 25.0};
    int eval_window = 25;  // rows fed to the encoder for the position table
    int64_t n_t_eval = 64;
    int n_threads = 1;
};

/// Per-position, per-time-range APE95/MAE table at a fixed window size.
/// Columns: position_frac, t_hi, ape95_mean, ape95_p90, mae_mean, mae_p90.
metrics::Report heat_eval_positions(const nn::ModelBundle& bundle,
                                    const std::vector<data::Dataset>& sets,
                                    const HeatEvalOptions& opt);

/// Window-size sweep at the boundary positions.
/// Columns: window, ape95_mean, ape95_p90, mae_mean, mae_p90.
metrics::Report heat_eval_windows(const nn::ModelBundle& bundle,
                                  const std::vector<data::Dataset>& sets,
                                  const HeatEvalOptions& opt);

struct NsEvalResult {
    metrics::Report field_errors;  // variable x aggregation rows
    double r2_umax = 0.0, r2_f = 0.0;
    CrossvalScatter crossval;  // scaled-MAE model vs comparison
};

struct NsEvalOptions {
    double t_start_frac = 0.6;  // evaluate on t > 0.6 T only
    int64_t node_stride = 1;
    int64_t time_stride = 2;
    int64_t inlet_ny = 16, inlet_nt = 32;
    int n_threads = 1;
};

NsEvalResult ns_eval(const nn::ModelBundle& bundle, const std::vector<data::Dataset>& sets,
                     const NsEvalOptions& opt);

}  // namespace pinnse::apps
