#include "pinnse/config.hpp"

#include <fstream>

#include <json.hpp>

#include "pinnse/datasets.hpp"

namespace pinnse::cli {

using nlohmann::json;

uint64_t RunConfig::hash() const { return data::fnv1a64(json_text.data(), json_text.size()); }

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_campaign(const json& j, RunConfig& cfg) {
    if (!j.contains("campaign")) return;
    const json& c = j["campaign"];
    if (cfg.app == "rossler") {
        auto& rc = cfg.rossler_campaign;
        maybe(c, "n_datasets", rc.n_datasets);
        maybe(c, "x0_lo", rc.x0_lo);
        maybe(c, "x0_hi", rc.x0_hi);
        maybe(c, "y0_lo", rc.y0_lo);
        maybe(c, "y0_hi", rc.y0_hi);
        maybe(c, "c_lo", rc.c_lo);
        maybe(c, "c_hi", rc.c_hi);
        maybe(c, "z0", rc.z0);
        maybe(c, "noise_alpha", rc.noise_alpha);
        maybe(c, "train_frac", rc.train_frac);
        maybe(c, "val_frac", rc.val_frac);
        rc.seed = cfg.seed;
    } else if (cfg.app == "heat") {
        auto& hc = cfg.heat_campaign;
        maybe(c, "n_points", hc.n_points);
        maybe(c, "alpha_lo", hc.alpha_lo);
        maybe(c, "alpha_hi", hc.alpha_hi);
        maybe(c, "thick_lo", hc.thick_lo);
        maybe(c, "thick_hi", hc.thick_hi);
        maybe(c, "ic_lo", hc.ic_lo);
        maybe(c, "ic_hi", hc.ic_hi);
        maybe(c, "tpdb_lo", hc.tpdb_lo);
        maybe(c, "tpdb_hi", hc.tpdb_hi);
        maybe(c, "jitter_lo", hc.jitter_lo);
        maybe(c, "jitter_hi", hc.jitter_hi);
        maybe(c, "noise_alpha", hc.noise_alpha);
        maybe(c, "train_frac", hc.train_frac);
        maybe(c, "val_frac", hc.val_frac);
        maybe(c, "t_final", hc.t_final);
        hc.seed = cfg.seed;
    } else if (cfg.app == "ns") {
        auto& nc = cfg.ns_campaign;
        maybe(c, "n_datasets", nc.n_datasets);
        maybe(c, "umax_lo", nc.umax_lo);
        maybe(c, "umax_hi", nc.umax_hi);
        maybe(c, "f_lo", nc.f_lo);
        maybe(c, "f_hi", nc.f_hi);
        maybe(c, "nx", nc.nx);
        maybe(c, "ny", nc.ny);
        maybe(c, "train_frac", nc.train_frac);
        maybe(c, "val_frac", nc.val_frac);
        nc.seed = cfg.seed;
    }
}

void parse_train(const json& j, RunConfig& cfg) {
    if (!j.contains("train")) return;
    const json& t = j["train"];
    maybe(t, "epochs", cfg.train_opt.epochs);
    maybe(t, "batch_size", cfg.train_opt.batch_size);
    maybe(t, "n_colloc", cfg.train_opt.n_colloc);
    maybe(t, "log_every", cfg.train_opt.log_every);
    maybe(t, "win_lo", cfg.train_opt.win_lo);
    maybe(t, "win_hi", cfg.train_opt.win_hi);
    maybe(t, "val_window", cfg.train_opt.val_window);
    maybe(t, "clip_norm", cfg.train_opt.adam.clip_norm);
    if (t.contains("schedule")) {
        const json& s = t["schedule"];
        if (cfg.app == "rossler") {
            auto& r = cfg.rossler_sched;
            maybe(s, "lr0", r.lr0);
            maybe(s, "tau_sup", r.tau_sup);
            maybe(s, "tau_param", r.tau_param);
            maybe(s, "lambda_step", r.lambda_step);
            maybe(s, "lambda_decay", r.lambda_decay);
            maybe(s, "freeze_ident_too", r.freeze_ident_too);
            maybe(s, "beta", r.beta);
        } else if (cfg.app == "ns") {
            auto& n = cfg.ns_sched;
            maybe(s, "lr0", n.lr0);
            maybe(s, "lr_milestones", n.lr_milestones);
            maybe(s, "lr_drop", n.lr_drop);
            maybe(s, "pretrain_epochs", n.pretrain_epochs);
            maybe(s, "lambda_step", n.lambda_step);
            maybe(s, "tau_sup", n.tau_sup);
            maybe(s, "alpha_w", n.alpha_w);
            maybe(s, "eta", n.eta);
        } else if (cfg.app == "heat") {
            auto& h = cfg.heat_sched;
            maybe(s, "lr0", h.lr0);
            maybe(s, "lr_milestones", h.lr_milestones);
            maybe(s, "lr_drop", h.lr_drop);
            maybe(s, "beta1_step", h.beta1_step);
            maybe(s, "tau_sup", h.tau_sup);
            maybe(s, "tau_ic", h.tau_ic);
        }
    }
}

void parse_eval(const json& j, RunConfig& cfg) {
    if (cfg.app == "rossler") {
        cfg.eval_windows = {15, 20, 25, 30, 35};
        cfg.eval_noise_levels = {0.0, 0.10};
    } else if (cfg.app == "heat") {
        cfg.eval_windows = cfg.heat_eval.window_sizes;
    }
    if (!j.contains("eval")) return;
    const json& e = j["eval"];
    maybe(e, "window_sizes", cfg.eval_windows);
    maybe(e, "noise_levels", cfg.eval_noise_levels);
    maybe(e, "crossval_window", cfg.crossval_window);
    if (cfg.app == "heat") {
        maybe(e, "window_sizes", cfg.heat_eval.window_sizes);
        maybe(e, "positions", cfg.heat_eval.positions);
        maybe(e, "time_ranges", cfg.heat_eval.time_ranges);
        maybe(e, "eval_window", cfg.heat_eval.eval_window);
    }
    if (cfg.app == "ns") {
        maybe(e, "t_start_frac", cfg.ns_eval.t_start_frac);
        maybe(e, "time_stride", cfg.ns_eval.time_stride);
        maybe(e, "node_stride", cfg.ns_eval.node_stride);
    }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    PINNSE_CHECK(!j.is_discarded(), "config: malformed JSON");
    RunConfig cfg;
    PINNSE_CHECK(j.contains("app"), "config: missing 'app'");
    cfg.app = j.at("app").get<std::string>();
    PINNSE_CHECK(cfg.app == "rossler" || cfg.app == "ns" || cfg.app == "heat",
                 "config: app must be rossler | ns | heat");
    maybe(j, "seed", cfg.seed);
    cfg.model_seed = cfg.seed;
    if (j.contains("model")) {
        const json& m = j["model"];
        maybe(m, "width", cfg.width);
        maybe(m, "enc_layers", cfg.enc_layers);
        maybe(m, "pinn_layers", cfg.pinn_layers);
        maybe(m, "heads", cfg.ns_heads);
        maybe(m, "rff_freqs", cfg.rff_freqs);
        maybe(m, "rff_sigma", cfg.rff_sigma);
        maybe(m, "seed", cfg.model_seed);
    }
    parse_campaign(j, cfg);
    parse_train(j, cfg);
    parse_eval(j, cfg);
    cfg.train_opt.seed = cfg.seed;
    cfg.json_text = j.dump(2);
    cfg.train_opt.config_hash = cfg.hash();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    PINNSE_CHECK(f.good(), "config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

nn::BundleSpec bundle_spec_for(const RunConfig& cfg) {
    if (cfg.app == "rossler")
        return apps::rossler_bundle_spec(cfg.width, cfg.enc_layers, cfg.pinn_layers);
    if (cfg.app == "ns") return apps::ns_bundle_spec(cfg.width, cfg.width, cfg.ns_heads);
    return apps::heat_bundle_spec(cfg.width, cfg.rff_freqs, cfg.rff_sigma, cfg.seed + 1);
}

}  // namespace pinnse::cli
