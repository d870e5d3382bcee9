#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pinnse/datagen.hpp"
#include "pinnse/eval.hpp"
#include "pinnse/model.hpp"
#include "pinnse/train.hpp"

namespace pinnse::cli {

/// Parsed run configuration. The JSON text is kept verbatim so outputs can
/// carry the exact resolved config, and hashed to tie checkpoints to it.
struct RunConfig {
    std::string app;  // rossler | ns | heat
    uint64_t seed = 1;
    std::string json_text;  // resolved config (after CLI overrides)
    uint64_t hash() const;

    // generation
    data::RosslerCampaignConfig rossler_campaign;
    data::HeatCampaignConfig heat_campaign;
    data::NsCampaignConfig ns_campaign;

    // model
    int width = 32;
    int enc_layers = 4;
    int pinn_layers = 4;
    int ns_heads = 2;
    int rff_freqs = 24;
    double rff_sigma = 6.0;
    uint64_t model_seed = 1;

    // training
    train::TrainOptions train_opt;
    train::RosslerScheduleConfig rossler_sched;
    train::NsScheduleConfig ns_sched;
    train::HeatScheduleConfig heat_sched;

    // evaluation
    std::vector<int> eval_windows;
    std::vector<double> eval_noise_levels;
    int crossval_window = 25;
    apps::HeatEvalOptions heat_eval;
    apps::NsEvalOptions ns_eval;
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

nn::BundleSpec bundle_spec_for(const RunConfig& cfg);

}  // namespace pinnse::cli
