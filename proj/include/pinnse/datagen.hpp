#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinnse/datasets.hpp"
#include "pinnse/model.hpp"
#include "pinnse/physics.hpp"
#include "pinnse/tensor.hpp"

namespace pinnse::data {

// ------------------------------------------------------------------ Sobol

/// Low-discrepancy sequence in [0,1]^d, d <= 8, Gray-code order, built from
/// published direction numbers. First point is the origin unless skipped.
class SobolSampler {
  public:
    explicit SobolSampler(int dim, uint64_t skip = 0);
    int dim() const { return dim_; }
    std::vector<double> next();

  private:
    int dim_;
    uint64_t index_ = 0;
    std::array<uint32_t, 8> state_{};
    std::array<std::array<uint32_t, 32>, 8> dirs_{};
};

/// Warnock's closed form for the squared L2 star discrepancy.
double l2_star_discrepancy(const std::vector<std::vector<double>>& pts, int dim);

// ----------------------------------------------------------------- Rossler

struct RosslerTrajectory {
    Tensor times;   // [n]
    Tensor states;  // [n, 3]
    bool diverged = false;
};

/// Fixed-step RK4 with internal step dt_int, subsampled to dt_out. Flags
/// divergence when any |state| exceeds the bound.
RosslerTrajectory integrate_rossler(double x0, double y0, double z0,
                                    const phys::RosslerParams& p, double t_final = 20.0,
                                    double dt_out = 0.01, double dt_int = 1e-3,
                                    double divergence_bound = 1e3);

struct NoiseSpec {
    double alpha = 0.10;  // ratio in [0, 0.10]
    uint64_t seed = 0;
    /// sigma = alpha * sqrt(sum I^2) / N as printed; the rms flag switches to
    /// the conventional alpha * sqrt(sum I^2 / N).
    bool conventional_rms = false;
};

/// Additive i.i.d. Gaussian noise, one sigma per channel (column).
Tensor add_noise(const Tensor& traj, const NoiseSpec& spec);

/// First `count` snapshots at stride dt_ds/dt_out, anchored at t = 0.
/// Channel columns follow the time column.
nn::SensorWindow extract_window(const Tensor& times, const Tensor& channels, double dt_ds,
                                int count);

// -------------------------------------------------------------------- heat

struct HeatSimConfig {
    phys::HeatParams params;
    double t00 = 25.0, t0L = 25.0;  // IC endpoint temperatures (affine between)
    double t_final = 45.0;
    double dt = 0.05;
    int nx = 50;  // intervals; nodes = nx + 1
    bool with_drop = false;
    phys::RobinSign bcL_sign = phys::RobinSign::influx_positive;
};

struct HeatField {
    Tensor times;  // [nt]
    Tensor xs;     // [nx+1]
    Tensor field;  // [nt, nx+1]
};

/// Backward Euler in time, second-order central space, Robin BCs through
/// ghost nodes. Solved in deviation from T_inf so the q = 0 equilibrium is
/// preserved exactly.
HeatField heat_solve(const HeatSimConfig& cfg);

struct HeatWindowSpec {
    double jitter_lo = 1.0, jitter_hi = 5.0;  // acquisition spacing, s
    uint64_t seed = 0;
    double noise_alpha = 0.0;
};

/// Acquisition instants with jittered spacing over [0, t_final].
std::vector<double> acquisition_times(double t_final, const HeatWindowSpec& spec);

/// Rows [t, T0, TL, P0, PL] plus the static thickness column.
nn::SensorWindow heat_window(const HeatField& field, const HeatSimConfig& cfg,
                             const std::vector<double>& times, const NoiseSpec& noise);

// ---------------------------------------------------------------------- NS

struct NsToyConfig {
    phys::NsParams params;
    int nx = 24, ny = 12;   // structured grid
    double dt = 0.03;
    double t_final = 6.0;
};

/// Manufactured parametric flow stand-in for the out-of-scope FEM corpus:
/// divergence-free velocity driven by the true inlet profile at x = 0 and a
/// pressure field proportional to U(t). Conforms to the NS dataset layout.
Dataset make_ns_toy_dataset(const NsToyConfig& cfg);

/// Fixed sensor layout: 3 columns x 4 heights around the cylinder, snapped
/// to grid nodes.
std::vector<std::pair<double, double>> ns_sensor_layout(const phys::NsParams& p);

/// Loads an NS dataset file and validates the declared grid (dt = 0.03,
/// T = 6 unless overridden by the stored scalars).
Dataset ingest_ns_dataset(const std::string& path);

/// Pressure traces at the stored sensor coordinates: [N_t, 12].
Tensor ns_sensor_traces(const Dataset& ds);

// ----------------------------------------------------------------- campaigns

struct RosslerCampaignConfig {
    int n_datasets = 48;
    double x0_lo = -5.0, x0_hi = 5.0;
    double y0_lo = -5.0, y0_hi = 5.0;
    double c_lo = 4.0, c_hi = 7.0;
    double z0 = 4.0;
    double noise_alpha = 0.10;
    double train_frac = 38.0 / 48.0, val_frac = 5.0 / 48.0;
    uint64_t seed = 1;
    int n_threads = 1;
};

struct HeatCampaignConfig {
    int n_points = 128;  // parameter points; two datasets (drop / no-drop) each
    double alpha_lo = 1.48e-7, alpha_hi = 1.52e-7;
    double qk_low_lo = 9.6e3, qk_low_hi = 10.6e3;
    double qk_high_lo = 16.3e3, qk_high_hi = 18.3e3;
    double thick_lo = 1.58e-3, thick_hi = 2.41e-3;
    double ic_lo = 22.0, ic_hi = 30.0;
    double tpdb_lo = 4.0, tpdb_hi = 15.0;
    double k_lo = 0.28, k_hi = 0.35;
    double h = 8.0;
    double t_inf = 25.0;
    double t_final = 45.0;
    double jitter_lo = 1.0, jitter_hi = 2.0;
    double noise_alpha = 0.05;
    double train_frac = 0.75, val_frac = 0.125;
    uint64_t seed = 1;
    int n_threads = 1;
};

struct NsCampaignConfig {
    int n_datasets = 30;
    double umax_lo = 0.05, umax_hi = 0.30;
    double f_lo = 1.0, f_hi = 5.0;
    int nx = 24, ny = 12;
    double train_frac = 0.8, val_frac = 0.1;
    uint64_t seed = 1;
    int n_threads = 1;
};

struct CampaignResult {
    Manifest manifest;
    std::vector<Dataset> datasets;  // parallel to manifest.files
};

CampaignResult sample_rossler_campaign(const RosslerCampaignConfig& cfg);
CampaignResult sample_heat_campaign(const HeatCampaignConfig& cfg);
CampaignResult sample_ns_campaign(const NsCampaignConfig& cfg);

/// Writes datasets plus manifest into a directory; file names are stable.
void write_campaign(const CampaignResult& campaign, const std::string& dir);

}  // namespace pinnse::data
