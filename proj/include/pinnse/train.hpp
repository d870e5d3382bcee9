#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pinnse/datagen.hpp"
#include "pinnse/datasets.hpp"
#include "pinnse/model.hpp"
#include "pinnse/physics.hpp"

namespace pinnse::train {

// ---------------------------------------------------------------- optimizer

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 10.0;  // global norm over trainable gradients
};

struct AdamState {
    std::vector<Tensor> m, v;  // parallel to the bundle's parameter list
    int64_t step = 0;
};

AdamState make_adam_state(const nn::ModelBundle& bundle);

/// One Adam update at the given learning rate. Parameters whose block is
/// frozen (or marked non-trainable) are skipped entirely: weights and
/// moments stay bit-identical. Returns the pre-clip global gradient norm.
/// Throws NumericError on non-finite gradients.
double opt_step(AdamState& state, nn::ModelBundle& bundle, std::vector<Tensor>& grads,
                double lr, const AdamConfig& cfg, const std::set<std::string>& frozen_blocks);

// ---------------------------------------------------------------- schedules

struct ScheduleState {
    int64_t epoch = 0;
    double lr = 1e-3;
    bool encoder_frozen = false;
    bool physics_only = false;  // NS: trainables restricted to the PINN heads
    // loss weights; which ones are live depends on the app
    double lambda = 0.0, beta = 1.0;           // rossler
    double alpha_w = 10.0, eta = 0.1;          // ns
    double b1 = 0.0, b2 = 5.0, b3 = 1.0, b4 = 10.0;  // heat
};

struct RosslerScheduleConfig {
    double lr0 = 6e-3;
    double lr_decay_fast = 0.999, lr_decay_slow = 0.9999, lr_knee = 1e-3;
    double lambda_step = 1e-4, lambda_decay = 0.99;
    double tau_sup = 0.5;    // L_sup gate for the lambda ramp
    double tau_param = 0.05; // relative validation parameter error freezing the encoder
    bool freeze_ident_too = false;
    double beta = 1.0;
};

ScheduleState rossler_schedule_init(const RosslerScheduleConfig& cfg);
void rossler_schedule_step(ScheduleState& s, const RosslerScheduleConfig& cfg,
                           double val_param_rel_err, double l_sup);

struct NsScheduleConfig {
    double lr0 = 1e-3;
    std::vector<int64_t> lr_milestones = {500, 2000};
    double lr_drop = 0.5;
    int64_t pretrain_epochs = 300;  // physics activates after this
    double lambda_step = 2e-4;
    double tau_sup = 0.05;
    double alpha_w = 10.0, eta = 0.1;
};

ScheduleState ns_schedule_init(const NsScheduleConfig& cfg);
void ns_schedule_step(ScheduleState& s, const NsScheduleConfig& cfg, double l_sup);

struct HeatScheduleConfig {
    double lr0 = 1e-3;
    std::vector<int64_t> lr_milestones = {1000, 2000};
    double lr_drop = 0.5;
    double beta1_step = 1e-4;
    double tau_sup = 0.02;
    double tau_ic = 0.02;
};

ScheduleState heat_schedule_init(const HeatScheduleConfig& cfg);
void heat_schedule_step(ScheduleState& s, const HeatScheduleConfig& cfg, double l_sup,
                        double l_ic);

/// Blocks excluded from updates under the current schedule state.
std::set<std::string> frozen_blocks(const nn::ModelBundle& bundle, const ScheduleState& s,
                                    bool freeze_ident_too);

// --------------------------------------------------------------- checkpoint

struct Checkpoint {
    nn::ModelBundle bundle;
    ScheduleState schedule;
    uint64_t config_hash = 0;
    int64_t epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// ----------------------------------------------------------------- training

struct HistoryRow {
    int64_t epoch;
    double lr;
    std::vector<std::pair<std::string, double>> values;  // loss parts + val metrics
};

void write_history_csv(const std::vector<HistoryRow>& rows, const std::string& path);

struct TrainOptions {
    int64_t epochs = 500;
    int64_t batch_size = 0;  // 0 = full batch
    uint64_t seed = 7;
    AdamConfig adam;
    uint64_t config_hash = 0;
    // collocation points per dataset per step
    int64_t n_colloc = 128;
    // rossler window-size range sampled during training
    int win_lo = 10, win_hi = 40;
    int val_window = 25;
    int64_t log_every = 25;  // epochs between validation/history rows
    std::optional<ScheduleState> resume;  // continue from a checkpoint's state
};

struct TrainResult {
    Checkpoint best, last;
    std::vector<HistoryRow> history;
    int64_t best_epoch = 0;
    bool aborted = false;  // non-finite loss; best/last hold the last good state
};

TrainResult train_rossler(nn::ModelBundle bundle, const std::vector<data::Dataset>& train_sets,
                          const std::vector<data::Dataset>& val_sets,
                          const RosslerScheduleConfig& sched, const TrainOptions& opt);

TrainResult train_ns(nn::ModelBundle bundle, const std::vector<data::Dataset>& train_sets,
                     const std::vector<data::Dataset>& val_sets, const NsScheduleConfig& sched,
                     const TrainOptions& opt);

TrainResult train_heat(nn::ModelBundle bundle, const std::vector<data::Dataset>& train_sets,
                       const std::vector<data::Dataset>& val_sets,
                       const HeatScheduleConfig& sched, const TrainOptions& opt);

}  // namespace pinnse::train
