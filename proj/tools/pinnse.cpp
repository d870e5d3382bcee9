// Command-line frontend: generate campaigns, train, evaluate, and run
// cross-validation diagnostics for the three applications. All state lives
// on disk; every output directory receives the resolved config that
// produced it.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "pinnse/config.hpp"
#include "pinnse/datasets.hpp"
#include "pinnse/eval.hpp"
#include "pinnse/kernels.hpp"
#include "pinnse/train.hpp"

namespace fs = std::filesystem;
using namespace pinnse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void ensure_out_dir(const std::string& out, bool force) {
    if (fs::exists(out) && !fs::is_empty(out)) {
        PINNSE_CHECK(force, "output directory exists and is not empty (use --force): " + out);
    }
    fs::create_directories(out);
}

void write_resolved_config(const cli::RunConfig& cfg, const std::string& out) {
    std::ofstream f(fs::path(out) / "config.json");
    f << cfg.json_text << "\n";
}

std::vector<data::Dataset> load_split(const data::Manifest& manifest, const std::string& dir,
                                      const std::string& split) {
    std::vector<data::Dataset> out;
    for (size_t i = 0; i < manifest.files.size(); ++i)
        if (manifest.splits[i] == split)
            out.push_back(data::read_dataset((fs::path(dir) / manifest.files[i]).string()));
    return out;
}

int cmd_gen(const cli::RunConfig& cfg, const std::string& out, bool force) {
    ensure_out_dir(out, force);
    data::CampaignResult campaign;
    if (cfg.app == "rossler")
        campaign = data::sample_rossler_campaign(cfg.rossler_campaign);
    else if (cfg.app == "heat")
        campaign = data::sample_heat_campaign(cfg.heat_campaign);
    else
        campaign = data::sample_ns_campaign(cfg.ns_campaign);
    campaign.manifest.config_json = cfg.json_text;
    data::write_campaign(campaign, out);
    write_resolved_config(cfg, out);
    std::printf("gen: %zu datasets (%zu rejected) -> %s\n", campaign.datasets.size(),
                campaign.manifest.rejected.size(), out.c_str());
    return kExitOk;
}

int cmd_train(const cli::RunConfig& cfg, const std::string& data_dir, const std::string& out,
              bool force, const std::string& resume_path) {
    ensure_out_dir(out, force);
    data::Manifest manifest = data::read_manifest((fs::path(data_dir) / "manifest.json").string());
    PINNSE_CHECK_DATA(manifest.app == cfg.app, "manifest app does not match config app");
    std::vector<data::Dataset> train_sets = load_split(manifest, data_dir, "train");
    std::vector<data::Dataset> val_sets = load_split(manifest, data_dir, "val");

    nn::ModelBundle bundle;
    train::TrainOptions opt = cfg.train_opt;
    if (!resume_path.empty()) {
        train::Checkpoint ckpt = train::load_checkpoint(resume_path);
        PINNSE_CHECK(ckpt.config_hash == cfg.hash(),
                     "checkpoint config hash does not match this config; refusing to resume");
        bundle = ckpt.bundle;
        opt.resume = ckpt.schedule;
        std::printf("train: resuming from epoch %lld\n",
                    static_cast<long long>(ckpt.schedule.epoch));
    } else {
        bundle = nn::make_bundle(cli::bundle_spec_for(cfg), cfg.model_seed);
    }

    train::TrainResult result;
    if (cfg.app == "rossler")
        result = train::train_rossler(bundle, train_sets, val_sets, cfg.rossler_sched, opt);
    else if (cfg.app == "ns")
        result = train::train_ns(bundle, train_sets, val_sets, cfg.ns_sched, opt);
    else
        result = train::train_heat(bundle, train_sets, val_sets, cfg.heat_sched, opt);

    train::save_checkpoint(result.best, (fs::path(out) / "best.psck").string());
    train::save_checkpoint(result.last, (fs::path(out) / "last.psck").string());
    train::write_history_csv(result.history, (fs::path(out) / "history.csv").string());
    {
        std::ofstream marker(fs::path(out) / "best_epoch.txt");
        marker << result.best_epoch << "\n";
    }
    write_resolved_config(cfg, out);
    if (result.aborted) {
        std::fprintf(stderr, "train: aborted on non-finite loss; last good state saved\n");
        return kExitNumeric;
    }
    std::printf("train: %lld epochs, best at %lld -> %s\n",
                static_cast<long long>(result.last.schedule.epoch),
                static_cast<long long>(result.best_epoch), out.c_str());
    return kExitOk;
}

int cmd_eval(const cli::RunConfig& cfg, const std::string& data_dir,
             const std::string& ckpt_path, const std::string& out, bool force,
             const std::string& split) {
    ensure_out_dir(out, force);
    data::Manifest manifest = data::read_manifest((fs::path(data_dir) / "manifest.json").string());
    train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
    std::vector<data::Dataset> sets = load_split(manifest, data_dir, split);
    PINNSE_CHECK_DATA(!sets.empty(), "eval: no datasets in split " + split);

    if (cfg.app == "rossler") {
        metrics::Report rep =
            apps::rossler_eval(ckpt.bundle, sets, cfg.eval_windows, cfg.eval_noise_levels, cfg.heat_eval.n_threads);
        rep.write_csv((fs::path(out) / "rossler_eval.csv").string());
        rep.write_json((fs::path(out) / "rossler_eval.json").string());
    } else if (cfg.app == "heat") {
        metrics::Report pos = apps::heat_eval_positions(ckpt.bundle, sets, cfg.heat_eval);
        pos.write_csv((fs::path(out) / "heat_positions.csv").string());
        pos.write_json((fs::path(out) / "heat_positions.json").string());
        metrics::Report win = apps::heat_eval_windows(ckpt.bundle, sets, cfg.heat_eval);
        win.write_csv((fs::path(out) / "heat_windows.csv").string());
        win.write_json((fs::path(out) / "heat_windows.json").string());
    } else {
        apps::NsEvalResult res = apps::ns_eval(ckpt.bundle, sets, cfg.ns_eval);
        res.field_errors.write_csv((fs::path(out) / "ns_field_errors.csv").string());
        res.field_errors.write_json((fs::path(out) / "ns_field_errors.json").string());
        metrics::Report ident;
        ident.columns = {"r2_umax", "r2_f"};
        ident.rows = {{res.r2_umax, res.r2_f}};
        ident.write_csv((fs::path(out) / "ns_ident.csv").string());
        ident.write_json((fs::path(out) / "ns_ident.json").string());
    }
    write_resolved_config(cfg, out);
    std::printf("eval: %zu datasets -> %s\n", sets.size(), out.c_str());
    return kExitOk;
}

int cmd_crossval(const cli::RunConfig& cfg, const std::string& data_dir,
                 const std::string& ckpt_path, const std::string& out, bool force,
                 const std::string& split) {
    PINNSE_CHECK(cfg.app != "heat",
                 "crossval: the heat application has no identification head; "
                 "cross-validation is unsupported for it");
    ensure_out_dir(out, force);
    data::Manifest manifest = data::read_manifest((fs::path(data_dir) / "manifest.json").string());
    train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
    std::vector<data::Dataset> sets = load_split(manifest, data_dir, split);
    PINNSE_CHECK_DATA(sets.size() >= 3, "crossval: need at least 3 datasets");

    if (cfg.app == "rossler") {
        apps::CrossvalScatter cv =
            apps::rossler_crossval(ckpt.bundle, sets, cfg.crossval_window, true);
        cv.scatter.write_csv((fs::path(out) / "crossval_scatter.csv").string());
        cv.scatter.write_json((fs::path(out) / "crossval_scatter.json").string());
        metrics::Report summary;
        summary.columns = {"r2", "r2_printed_sign"};
        summary.rows = {{cv.r2, cv.r2_printed}};
        summary.write_csv((fs::path(out) / "crossval_summary.csv").string());
        std::printf("crossval: R2 = %.4f (printed-sign variant %.4f)\n", cv.r2, cv.r2_printed);
    } else {
        apps::NsEvalResult res = apps::ns_eval(ckpt.bundle, sets, cfg.ns_eval);
        res.crossval.scatter.write_csv((fs::path(out) / "crossval_scatter.csv").string());
        res.crossval.scatter.write_json((fs::path(out) / "crossval_scatter.json").string());
        metrics::Report summary;
        summary.columns = {"r2"};
        summary.rows = {{res.crossval.r2}};
        summary.write_csv((fs::path(out) / "crossval_summary.csv").string());
        std::printf("crossval: R2 = %.4f\n", res.crossval.r2);
    }
    write_resolved_config(cfg, out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PINN sequence-encoder workbench"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", data_dir, ckpt_path, resume_path, split = "test";
    uint64_t seed_override = 0;
    bool force = false;
    int threads = 1;

    auto add_common = [&](CLI::App* sub, bool needs_data, bool needs_ckpt) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed_override, "override the config seed");
        sub->add_flag("--force", force, "overwrite non-empty output directories");
        sub->add_option("--threads", threads, "worker threads for gen/eval");
        if (needs_data)
            sub->add_option("--data", data_dir, "campaign directory (with manifest.json)")
                ->required();
        if (needs_ckpt)
            sub->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic campaign");
    add_common(gen, false, false);
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a campaign");
    add_common(train_cmd, true, false);
    train_cmd->add_option("--resume", resume_path, "continue from a checkpoint");
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval_cmd, true, true);
    eval_cmd->add_option("--split", split, "dataset split to evaluate (train|val|test)");
    CLI::App* cv_cmd = app.add_subcommand("crossval", "cross-validation diagnostic");
    add_common(cv_cmd, true, true);
    cv_cmd->add_option("--split", split, "dataset split to evaluate");

    CLI11_PARSE(app, argc, argv);

    try {
        cli::RunConfig cfg = cli::parse_config_file(config_path);
        if (seed_override != 0) {
            // re-resolve with the override baked into the stored text
            std::string text = cfg.json_text;
            auto j = nlohmann::json::parse(text);
            j["seed"] = seed_override;
            cfg = cli::parse_config_text(j.dump(2));
        }
        cfg.rossler_campaign.n_threads = threads;
        cfg.heat_campaign.n_threads = threads;
        cfg.ns_campaign.n_threads = threads;
        cfg.heat_eval.n_threads = threads;
        cfg.ns_eval.n_threads = threads;

        if (gen->parsed()) return cmd_gen(cfg, out_dir, force);
        if (train_cmd->parsed()) return cmd_train(cfg, data_dir, out_dir, force, resume_path);
        if (eval_cmd->parsed()) return cmd_eval(cfg, data_dir, ckpt_path, out_dir, force, split);
        if (cv_cmd->parsed()) return cmd_crossval(cfg, data_dir, ckpt_path, out_dir, force, split);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
