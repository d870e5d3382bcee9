#pragma once

#include <vector>

#include "pinnse/datagen.hpp"
#include "pinnse/datasets.hpp"
#include "pinnse/model.hpp"
#include "pinnse/physics.hpp"
#include "pinnse/rng.hpp"

namespace pinnse::apps {

// ---------------------------------------------------------------- Rossler

/// Per-dataset tensors shared by training and evaluation. The supervision
/// grid is the 0.5 s snapshot grid; windows are prefixes of it.
struct RosslerPrepared {
    Tensor sup_times;    // [40]
    Tensor sup_noisy;    // [40, 3]
    Tensor grid_noisy;   // [40, 4]  (t, x, y, z) window rows, noisy channels
    Tensor grid_exact;   // [40, 4]
    Tensor eval_times;   // [400]  0.05 s test grid
    Tensor eval_exact;   // [400, 3]
    double c = 0, a = 0.2, b = 0.2;
};

RosslerPrepared prepare_rossler(const data::Dataset& ds);
nn::SensorWindow rossler_window(const RosslerPrepared& p, int n_rows, bool noisy);

phys::RosslerBatch make_rossler_batch(const std::vector<const RosslerPrepared*>& sets,
                                      int64_t n_colloc, Rng& rng);

/// Default desk-scale bundle (window arity 4, one 3-output head).
nn::BundleSpec rossler_bundle_spec(int width, int enc_layers = 4, int pinn_layers = 4);

// -------------------------------------------------------------------- heat

struct HeatPrepared {
    Tensor sensor_rows;  // [n, 5] + thickness static
    double thickness = 0;
    phys::HeatParams params;
    double t00 = 0, t0L = 0;
    bool with_drop = false;
    double t_final = 45.0;
    Tensor field_times, field_xs, field;  // solver truth for eval/supervision
};

HeatPrepared prepare_heat(const data::Dataset& ds);
nn::SensorWindow heat_window_prefix(const HeatPrepared& p, int n_rows);

struct HeatBatchConfig {
    int64_t n_sup_times = 24;   // per face, subsampled from the sensor rows
    int64_t n_ic = 12;
    int64_t n_bc = 16;
    int64_t n_colloc = 96;
    phys::RobinSign bcL_sign = phys::RobinSign::influx_positive;
    double temp_scale = 100.0, time_scale = 45.0, fluxk_scale = 1.4e4;
};

phys::HeatBatch make_heat_batch(const std::vector<const HeatPrepared*>& sets,
                                const HeatBatchConfig& cfg, Rng& rng);

nn::BundleSpec heat_bundle_spec(int width, int rff_freqs = 24, double rff_sigma = 6.0,
                                uint64_t rff_seed = 1234);

// ---------------------------------------------------------------------- NS

struct NsPrepared {
    Tensor coords;         // [n_nodes, 2]
    Tensor fields;         // [nt, n_nodes, 3]
    Tensor sensor_traces;  // [nt, 12]
    Tensor sensor_coords;  // [12, 2]
    double u_max = 0, freq = 0, dt = 0.03, t_final = 6.0;
    phys::NsParams params;
};

NsPrepared prepare_ns(const data::Dataset& ds);
/// Fixed 120-row window over t in [0, 0.6 T]: rows [t, p_1..p_12].
nn::SensorWindow ns_window(const NsPrepared& p, int n_rows = 120);

struct NsBatchConfig {
    int64_t n_vel_times = 8;     // times per step for the 12 velocity points
    int64_t n_p_locs = 32;       // pressure locations sampled from the 147 pool
    int64_t n_p_times = 8;
    int64_t n_inlet_y = 8, n_inlet_times = 8;
    int64_t n_ic = 48;
    int64_t n_bc = 48;
    int64_t n_colloc = 256;
    int64_t n_vel_locs = 12;   // supervision pools, per the source setup
    int64_t n_p_pool = 147;
};

struct NsSupervisionPool {
    std::vector<int64_t> vel_nodes;  // 12
    std::vector<int64_t> p_nodes;    // 147
};

NsSupervisionPool make_ns_pool(const NsPrepared& p, const NsBatchConfig& cfg, uint64_t seed);

phys::NsBatch make_ns_batch(const std::vector<const NsPrepared*>& sets,
                            const std::vector<const NsSupervisionPool*>& pools,
                            const NsBatchConfig& cfg, Rng& rng);

nn::BundleSpec ns_bundle_spec(int enc_width, int pinn_width, int n_heads = 2);

}  // namespace pinnse::apps
