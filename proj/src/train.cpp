#include "pinnse/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pinnse/bundle_io.hpp"
#include "pinnse/drivers.hpp"
#include "pinnse/rng.hpp"

namespace pinnse::train {

using nlohmann::json;

// ---------------------------------------------------------------- optimizer

AdamState make_adam_state(const nn::ModelBundle& bundle) {
    AdamState s;
    for (const auto& t : bundle.values) {
        s.m.push_back(Tensor(t.shape()));
        s.v.push_back(Tensor(t.shape()));
    }
    return s;
}

double opt_step(AdamState& state, nn::ModelBundle& bundle, std::vector<Tensor>& grads,
                double lr, const AdamConfig& cfg, const std::set<std::string>& frozen_blocks) {
    PINNSE_CHECK(grads.size() == bundle.values.size(), "opt_step: gradient count mismatch");
    auto active = [&](size_t i) {
        return bundle.trainable[i] && frozen_blocks.count(bundle.blocks[i]) == 0;
    };
    // zero-mask gradients of gated blocks; validate the rest
    double sq = 0.0;
    for (size_t i = 0; i < grads.size(); ++i) {
        if (!active(i)) {
            for (int64_t e = 0; e < grads[i].numel(); ++e) grads[i][e] = 0.0;
            continue;
        }
        for (int64_t e = 0; e < grads[i].numel(); ++e) {
            const double g = grads[i][e];
            if (!std::isfinite(g)) throw NumericError("opt_step: non-finite gradient");
            sq += g * g;
        }
    }
    const double norm = std::sqrt(sq);
    const double clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

    state.step += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(state.step));
    for (size_t i = 0; i < grads.size(); ++i) {
        if (!active(i)) continue;
        Tensor& w = bundle.values[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (int64_t e = 0; e < w.numel(); ++e) {
            const double g = grads[i][e] * clip;
            m[e] = cfg.beta1 * m[e] + (1.0 - cfg.beta1) * g;
            v[e] = cfg.beta2 * v[e] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[e] / c1;
            const double vhat = v[e] / c2;
            w[e] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
    return norm;
}

// ---------------------------------------------------------------- schedules

ScheduleState rossler_schedule_init(const RosslerScheduleConfig& cfg) {
    ScheduleState s;
    s.lr = cfg.lr0;
    s.lambda = 0.0;
    s.beta = cfg.beta;
    return s;
}

void rossler_schedule_step(ScheduleState& s, const RosslerScheduleConfig& cfg,
                           double val_param_rel_err, double l_sup) {
    s.epoch += 1;
    s.lr *= (s.lr > cfg.lr_knee) ? cfg.lr_decay_fast : cfg.lr_decay_slow;
    if (val_param_rel_err >= 0.0 && val_param_rel_err < cfg.tau_param) s.encoder_frozen = true;
    if (l_sup < cfg.tau_sup)
        s.lambda += cfg.lambda_step;
    else
        s.lambda *= cfg.lambda_decay;
}

ScheduleState ns_schedule_init(const NsScheduleConfig& cfg) {
    ScheduleState s;
    s.lr = cfg.lr0;
    s.lambda = 0.0;
    s.alpha_w = cfg.alpha_w;
    s.eta = cfg.eta;
    return s;
}

void ns_schedule_step(ScheduleState& s, const NsScheduleConfig& cfg, double l_sup) {
    s.epoch += 1;
    for (int64_t m : cfg.lr_milestones)
        if (s.epoch == m) s.lr *= cfg.lr_drop;
    if (s.epoch > cfg.pretrain_epochs) {
        s.physics_only = true;
        if (l_sup < cfg.tau_sup) s.lambda += cfg.lambda_step;
    }
}

ScheduleState heat_schedule_init(const HeatScheduleConfig& cfg) {
    ScheduleState s;
    s.lr = cfg.lr0;
    s.b1 = 0.0;
    s.b2 = 5.0;
    s.b3 = 1.0;
    s.b4 = 10.0;
    return s;
}

void heat_schedule_step(ScheduleState& s, const HeatScheduleConfig& cfg, double l_sup,
                        double l_ic) {
    s.epoch += 1;
    for (int64_t m : cfg.lr_milestones)
        if (s.epoch == m) s.lr *= cfg.lr_drop;
    if (l_sup < cfg.tau_sup && l_ic < cfg.tau_ic) s.b1 += cfg.beta1_step;
}

std::set<std::string> frozen_blocks(const nn::ModelBundle& bundle, const ScheduleState& s,
                                    bool freeze_ident_too) {
    std::set<std::string> out;
    if (s.encoder_frozen) {
        out.insert("encoder");
        out.insert("post_pool");
        if (freeze_ident_too) out.insert("ident");
    }
    if (s.physics_only) {
        for (const auto& b : bundle.blocks)
            if (b.rfind("head", 0) != 0) out.insert(b);
    }
    return out;
}

// --------------------------------------------------------------- checkpoint

namespace {
constexpr char kCkptMagic[8] = {'P', 'S', 'C', 'K', '0', '0', '0', '1'};

json schedule_to_json(const ScheduleState& s) {
    json j;
    j["epoch"] = s.epoch;
    j["lr"] = s.lr;
    j["encoder_frozen"] = s.encoder_frozen;
    j["physics_only"] = s.physics_only;
    j["lambda"] = s.lambda;
    j["beta"] = s.beta;
    j["alpha_w"] = s.alpha_w;
    j["eta"] = s.eta;
    j["b1"] = s.b1;
    j["b2"] = s.b2;
    j["b3"] = s.b3;
    j["b4"] = s.b4;
    return j;
}

ScheduleState schedule_from_json(const json& j) {
    ScheduleState s;
    s.epoch = j.at("epoch").get<int64_t>();
    s.lr = j.at("lr").get<double>();
    s.encoder_frozen = j.at("encoder_frozen").get<bool>();
    s.physics_only = j.at("physics_only").get<bool>();
    s.lambda = j.at("lambda").get<double>();
    s.beta = j.at("beta").get<double>();
    s.alpha_w = j.at("alpha_w").get<double>();
    s.eta = j.at("eta").get<double>();
    s.b1 = j.at("b1").get<double>();
    s.b2 = j.at("b2").get<double>();
    s.b3 = j.at("b3").get<double>();
    s.b4 = j.at("b4").get<double>();
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json header;
    header["format_version"] = 1;
    header["config_hash"] = ckpt.config_hash;
    header["epoch"] = ckpt.epoch;
    header["schedule"] = schedule_to_json(ckpt.schedule);
    header["bundle_spec"] = json::parse(nn::bundle_spec_to_json(ckpt.bundle.spec));
    json params = json::array();
    uint64_t offset = 0;
    for (size_t i = 0; i < ckpt.bundle.names.size(); ++i) {
        json p;
        p["name"] = ckpt.bundle.names[i];
        p["block"] = ckpt.bundle.blocks[i];
        p["trainable"] = bool(ckpt.bundle.trainable[i]);
        p["shape"] = ckpt.bundle.values[i].shape();
        p["offset"] = offset;
        params.push_back(p);
        offset += uint64_t(ckpt.bundle.values[i].numel()) * sizeof(double);
    }
    header["params"] = params;
    const std::string htxt = header.dump();

    std::string blob;
    blob.append(kCkptMagic, 8);
    const uint64_t hlen = htxt.size();
    blob.append(reinterpret_cast<const char*>(&hlen), 8);
    blob.append(htxt);
    for (const auto& t : ckpt.bundle.values)
        blob.append(reinterpret_cast<const char*>(t.data()), size_t(t.numel()) * sizeof(double));
    const uint64_t checksum = data::fnv1a64(blob.data(), blob.size());
    blob.append(reinterpret_cast<const char*>(&checksum), 8);

    std::ofstream f(path, std::ios::binary);
    PINNSE_CHECK_DATA(f.good(), "cannot write checkpoint: " + path);
    f.write(blob.data(), std::streamsize(blob.size()));
    PINNSE_CHECK_DATA(f.good(), "checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    PINNSE_CHECK_DATA(f.good(), "cannot open checkpoint: " + path);
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    PINNSE_CHECK_DATA(blob.size() > 24, "checkpoint truncated: " + path);
    PINNSE_CHECK_DATA(std::memcmp(blob.data(), kCkptMagic, 8) == 0,
                      "not a checkpoint file: " + path);
    uint64_t stored_sum = 0;
    std::memcpy(&stored_sum, blob.data() + blob.size() - 8, 8);
    const uint64_t actual = data::fnv1a64(blob.data(), blob.size() - 8);
    PINNSE_CHECK_DATA(stored_sum == actual, "checkpoint checksum mismatch: " + path);

    uint64_t hlen = 0;
    std::memcpy(&hlen, blob.data() + 8, 8);
    PINNSE_CHECK_DATA(16 + hlen < blob.size(), "checkpoint header out of bounds");
    json header = json::parse(blob.substr(16, hlen), nullptr, false);
    PINNSE_CHECK_DATA(!header.is_discarded(), "malformed checkpoint header");
    PINNSE_CHECK_DATA(header.value("format_version", 0) == 1,
                      "unsupported checkpoint version");

    Checkpoint ckpt;
    ckpt.config_hash = header.at("config_hash").get<uint64_t>();
    ckpt.epoch = header.at("epoch").get<int64_t>();
    ckpt.schedule = schedule_from_json(header.at("schedule"));
    ckpt.bundle.spec = nn::bundle_spec_from_json(header.at("bundle_spec").dump());
    const char* payload = blob.data() + 16 + hlen;
    for (const auto& p : header.at("params")) {
        Shape shape = p.at("shape").get<Shape>();
        Tensor t(shape);
        std::memcpy(t.data(), payload + p.at("offset").get<uint64_t>(),
                    size_t(t.numel()) * sizeof(double));
        ckpt.bundle.names.push_back(p.at("name").get<std::string>());
        ckpt.bundle.blocks.push_back(p.at("block").get<std::string>());
        ckpt.bundle.trainable.push_back(p.at("trainable").get<bool>());
        ckpt.bundle.values.push_back(std::move(t));
    }
    return ckpt;
}

// ----------------------------------------------------------------- history

void write_history_csv(const std::vector<HistoryRow>& rows, const std::string& path) {
    std::ofstream f(path);
    PINNSE_CHECK_DATA(f.good(), "cannot write history: " + path);
    if (rows.empty()) return;
    f << "epoch,lr";
    for (const auto& [k, v] : rows[0].values) f << "," << k;
    f << "\n";
    char buf[64];
    for (const auto& r : rows) {
        f << r.epoch;
        std::snprintf(buf, sizeof(buf), ",%.17g", r.lr);
        f << buf;
        for (const auto& [k, v] : r.values) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            f << buf;
        }
        f << "\n";
    }
}

// ----------------------------------------------------------------- training

namespace {

std::vector<std::vector<size_t>> plan_batches(size_t n, int64_t batch_size, Rng& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    const size_t bs = batch_size <= 0 ? n : size_t(batch_size);
    std::vector<std::vector<size_t>> out;
    for (size_t start = 0; start < n; start += bs) {
        std::vector<size_t> b;
        for (size_t i = start; i < std::min(n, start + bs); ++i) b.push_back(idx[i]);
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<Tensor> collect_grads(const ad::Tape& tape, const nn::TapeModel& model) {
    std::vector<Tensor> grads;
    grads.reserve(model.params.size());
    for (ad::Var v : model.params) grads.push_back(tape.grad(v));
    return grads;
}

struct BestTracker {
    double score = 1e300;
    double tiebreak = 1e300;
    Checkpoint ckpt;
    int64_t epoch = -1;
    bool consider(double s, double tb, const nn::ModelBundle& bundle, const ScheduleState& st,
                  uint64_t config_hash, int64_t ep) {
        if (s < score - 1e-15 || (std::fabs(s - score) <= 1e-15 && tb < tiebreak)) {
            score = s;
            tiebreak = tb;
            ckpt = Checkpoint{bundle, st, config_hash, ep};
            epoch = ep;
            return true;
        }
        return false;
    }
};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

}  // namespace

TrainResult train_rossler(nn::ModelBundle bundle, const std::vector<data::Dataset>& train_sets,
                          const std::vector<data::Dataset>& val_sets,
                          const RosslerScheduleConfig& sched_cfg, const TrainOptions& opt) {
    using namespace apps;
    PINNSE_CHECK(!train_sets.empty(), "train_rossler: no training datasets");
    std::vector<RosslerPrepared> train_prep, val_prep;
    for (const auto& d : train_sets) train_prep.push_back(prepare_rossler(d));
    for (const auto& d : val_sets) val_prep.push_back(prepare_rossler(d));

    AdamState adam = make_adam_state(bundle);
    ScheduleState sched = opt.resume ? *opt.resume : rossler_schedule_init(sched_cfg);
    Rng root(opt.seed);
    TrainResult result;
    BestTracker best;
    Checkpoint last_good{bundle, sched, opt.config_hash, 0};

    auto val_param_err = [&]() {
        if (val_prep.empty()) return -1.0;
        std::vector<nn::SensorWindow> windows;
        for (const auto& p : val_prep) windows.push_back(rossler_window(p, opt.val_window, true));
        Tensor c_hat = nn::predict_params(bundle, windows);
        double acc = 0.0;
        for (size_t i = 0; i < val_prep.size(); ++i)
            acc += std::fabs(c_hat[int64_t(i)] - val_prep[i].c) / std::fabs(val_prep[i].c);
        return acc / double(val_prep.size());
    };

    auto val_losses = [&](Rng rng) {
        std::vector<const RosslerPrepared*> sets;
        std::vector<nn::SensorWindow> windows;
        for (const auto& p : val_prep) {
            sets.push_back(&p);
            windows.push_back(rossler_window(p, opt.val_window, true));
        }
        ad::Tape tape(nn::app_layout("rossler"));
        nn::TapeModel model = nn::begin_model(tape, bundle, nn::pack_windows(windows));
        phys::RosslerBatch batch = make_rossler_batch(sets, opt.n_colloc, rng);
        phys::RosslerWeights w{sched.lambda, sched.beta};
        return phys::build_rossler_loss(tape, bundle, model, batch, w);
    };

    for (int64_t epoch = 0; epoch < opt.epochs && !result.aborted; ++epoch) {
        Rng erng = root.fork(uint64_t(epoch) + 1);
        auto plan = plan_batches(train_prep.size(), opt.batch_size, erng);
        std::vector<double> ep_sup, ep_ode, ep_p, ep_total;
        const std::set<std::string> frozen = frozen_blocks(bundle, sched, sched_cfg.freeze_ident_too);
        try {
            for (const auto& batch_idx : plan) {
                std::vector<const RosslerPrepared*> sets;
                std::vector<nn::SensorWindow> windows;
                for (size_t i : batch_idx) {
                    sets.push_back(&train_prep[i]);
                    const int n = opt.win_lo + int(erng.below(uint64_t(opt.win_hi - opt.win_lo + 1)));
                    windows.push_back(rossler_window(train_prep[i], n, true));
                }
                ad::Tape tape(nn::app_layout("rossler"));
                nn::TapeModel model = nn::begin_model(tape, bundle, nn::pack_windows(windows));
                phys::RosslerBatch batch = make_rossler_batch(sets, opt.n_colloc, erng);
                phys::RosslerWeights w{sched.lambda, sched.beta};
                phys::LossParts parts = phys::build_rossler_loss(tape, bundle, model, batch, w);
                if (!std::isfinite(parts.value("total")))
                    throw NumericError("train_rossler: non-finite loss");
                tape.backward(parts.total);
                std::vector<Tensor> grads = collect_grads(tape, model);
                opt_step(adam, bundle, grads, sched.lr, opt.adam, frozen);
                ep_sup.push_back(parts.value("L_sup"));
                ep_ode.push_back(parts.value("L_ODE"));
                ep_p.push_back(parts.value("L_P"));
                ep_total.push_back(parts.value("total"));
            }
        } catch (const NumericError&) {
            result.aborted = true;
            bundle = last_good.bundle;
            sched = last_good.schedule;
        }
        if (result.aborted) break;

        const double vperr = val_param_err();
        const double train_sup = mean_of(ep_sup);
        rossler_schedule_step(sched, sched_cfg, vperr, train_sup);
        last_good = Checkpoint{bundle, sched, opt.config_hash, epoch + 1};

        if ((epoch + 1) % opt.log_every == 0 || epoch + 1 == opt.epochs) {
            HistoryRow row;
            row.epoch = epoch + 1;
            row.lr = sched.lr;
            row.values = {{"lambda", sched.lambda},
                          {"L_sup", train_sup},
                          {"L_ODE", mean_of(ep_ode)},
                          {"L_P", mean_of(ep_p)},
                          {"total", mean_of(ep_total)},
                          {"val_param_rel_err", vperr},
                          {"encoder_frozen", sched.encoder_frozen ? 1.0 : 0.0}};
            if (!val_prep.empty()) {
                phys::LossParts vparts = val_losses(root.fork(0x5a5a + uint64_t(epoch)));
                row.values.emplace_back("val_L_sup", vparts.value("L_sup"));
                row.values.emplace_back("val_L_ODE", vparts.value("L_ODE"));
                row.values.emplace_back("val_L_P", vparts.value("L_P"));
                best.consider(vparts.value("L_sup") + vparts.value("L_P"),
                              vparts.value("L_ODE"), bundle, sched, opt.config_hash, epoch + 1);
            } else {
                best.consider(mean_of(ep_total), 0.0, bundle, sched, opt.config_hash, epoch + 1);
            }
            result.history.push_back(std::move(row));
        }
    }
    result.last = Checkpoint{bundle, sched, opt.config_hash, sched.epoch};
    result.best = best.epoch >= 0 ? best.ckpt : result.last;
    result.best_epoch = best.epoch >= 0 ? best.epoch : sched.epoch;
    return result;
}

TrainResult train_ns(nn::ModelBundle bundle, const std::vector<data::Dataset>& train_sets,
                     const std::vector<data::Dataset>& val_sets,
                     const NsScheduleConfig& sched_cfg, const TrainOptions& opt) {
    using namespace apps;
    PINNSE_CHECK(!train_sets.empty(), "train_ns: no training datasets");
    std::vector<NsPrepared> train_prep, val_prep;
    for (const auto& d : train_sets) train_prep.push_back(prepare_ns(d));
    for (const auto& d : val_sets) val_prep.push_back(prepare_ns(d));
    NsBatchConfig bcfg;
    bcfg.n_colloc = opt.n_colloc;
    std::vector<NsSupervisionPool> train_pools, val_pools;
    for (size_t i = 0; i < train_prep.size(); ++i)
        train_pools.push_back(make_ns_pool(train_prep[i], bcfg, opt.seed + i));
    for (size_t i = 0; i < val_prep.size(); ++i)
        val_pools.push_back(make_ns_pool(val_prep[i], bcfg, opt.seed + 1000 + i));

    AdamState adam = make_adam_state(bundle);
    ScheduleState sched = opt.resume ? *opt.resume : ns_schedule_init(sched_cfg);
    Rng root(opt.seed);
    TrainResult result;
    BestTracker best;
    Checkpoint last_good{bundle, sched, opt.config_hash, 0};

    auto val_param_err = [&]() {
        if (val_prep.empty()) return -1.0;
        std::vector<nn::SensorWindow> windows;
        for (const auto& p : val_prep) windows.push_back(ns_window(p));
        Tensor prm = nn::predict_params(bundle, windows);
        double acc = 0.0;
        for (size_t i = 0; i < val_prep.size(); ++i) {
            acc += 0.5 * (std::fabs(prm.at2(int64_t(i), 0) - val_prep[i].u_max) /
                              std::fabs(val_prep[i].u_max) +
                          std::fabs(prm.at2(int64_t(i), 1) - val_prep[i].freq) /
                              std::fabs(val_prep[i].freq));
        }
        return acc / double(val_prep.size());
    };

    for (int64_t epoch = 0; epoch < opt.epochs && !result.aborted; ++epoch) {
        Rng erng = root.fork(uint64_t(epoch) + 1);
        auto plan = plan_batches(train_prep.size(), opt.batch_size, erng);
        std::vector<double> ep_sup, ep_total, ep_pde, ep_param;
        const std::set<std::string> frozen = frozen_blocks(bundle, sched, false);
        try {
            for (const auto& batch_idx : plan) {
                std::vector<const NsPrepared*> sets;
                std::vector<const NsSupervisionPool*> pools;
                std::vector<nn::SensorWindow> windows;
                for (size_t i : batch_idx) {
                    sets.push_back(&train_prep[i]);
                    pools.push_back(&train_pools[i]);
                    windows.push_back(ns_window(train_prep[i]));
                }
                ad::Tape tape(nn::app_layout("ns"));
                nn::TapeModel model = nn::begin_model(tape, bundle, nn::pack_windows(windows));
                phys::NsBatch batch = make_ns_batch(sets, pools, bcfg, erng);
                phys::NsWeights w{sched.alpha_w, sched.lambda, sched.eta};
                phys::LossParts parts = phys::build_ns_loss(tape, bundle, model, batch, w);
                if (!std::isfinite(parts.value("total")))
                    throw NumericError("train_ns: non-finite loss");
                tape.backward(parts.total);
                std::vector<Tensor> grads = collect_grads(tape, model);
                opt_step(adam, bundle, grads, sched.lr, opt.adam, frozen);
                ep_sup.push_back(parts.value("L_sup"));
                ep_pde.push_back(parts.value("L_PDE"));
                ep_param.push_back(parts.value("L_P"));
                ep_total.push_back(parts.value("total"));
            }
        } catch (const NumericError&) {
            result.aborted = true;
            bundle = last_good.bundle;
            sched = last_good.schedule;
        }
        if (result.aborted) break;

        const double train_sup = mean_of(ep_sup);
        ns_schedule_step(sched, sched_cfg, train_sup);
        last_good = Checkpoint{bundle, sched, opt.config_hash, epoch + 1};

        if ((epoch + 1) % opt.log_every == 0 || epoch + 1 == opt.epochs) {
            const double vperr = val_param_err();
            HistoryRow row;
            row.epoch = epoch + 1;
            row.lr = sched.lr;
            row.values = {{"lambda", sched.lambda},
                          {"L_sup", train_sup},
                          {"L_PDE", mean_of(ep_pde)},
                          {"L_P", mean_of(ep_param)},
                          {"total", mean_of(ep_total)},
                          {"val_param_rel_err", vperr},
                          {"physics_only", sched.physics_only ? 1.0 : 0.0}};
            best.consider(train_sup + mean_of(ep_param) + std::max(0.0, vperr), mean_of(ep_pde),
                          bundle, sched, opt.config_hash, epoch + 1);
            result.history.push_back(std::move(row));
        }
    }
    result.last = Checkpoint{bundle, sched, opt.config_hash, sched.epoch};
    result.best = best.epoch >= 0 ? best.ckpt : result.last;
    result.best_epoch = best.epoch >= 0 ? best.epoch : sched.epoch;
    return result;
}

TrainResult train_heat(nn::ModelBundle bundle, const std::vector<data::Dataset>& train_sets,
                       const std::vector<data::Dataset>& val_sets,
                       const HeatScheduleConfig& sched_cfg, const TrainOptions& opt) {
    using namespace apps;
    PINNSE_CHECK(!train_sets.empty(), "train_heat: no training datasets");
    std::vector<HeatPrepared> train_prep, val_prep;
    for (const auto& d : train_sets) train_prep.push_back(prepare_heat(d));
    for (const auto& d : val_sets) val_prep.push_back(prepare_heat(d));
    HeatBatchConfig bcfg;
    bcfg.n_colloc = opt.n_colloc;

    AdamState adam = make_adam_state(bundle);
    ScheduleState sched = opt.resume ? *opt.resume : heat_schedule_init(sched_cfg);
    Rng root(opt.seed);
    TrainResult result;
    BestTracker best;
    Checkpoint last_good{bundle, sched, opt.config_hash, 0};

    auto window_size_for = [&](const HeatPrepared& p, Rng& rng) {
        const int avail = int(p.sensor_rows.dim(0));
        const int hi = std::min(avail, opt.win_hi);
        const int lo = std::min(avail, opt.win_lo);
        return lo + int(rng.below(uint64_t(hi - lo + 1)));
    };

    auto val_losses = [&](Rng rng) {
        std::vector<const HeatPrepared*> sets;
        std::vector<nn::SensorWindow> windows;
        for (const auto& p : val_prep) {
            sets.push_back(&p);
            windows.push_back(
                heat_window_prefix(p, std::min<int>(opt.val_window, int(p.sensor_rows.dim(0)))));
        }
        ad::Tape tape(nn::app_layout("heat"));
        nn::TapeModel model = nn::begin_model(tape, bundle, nn::pack_windows(windows));
        phys::HeatBatch batch = make_heat_batch(sets, bcfg, rng);
        phys::HeatWeights w{sched.b1, sched.b2, sched.b3, sched.b4};
        return phys::build_heat_loss(tape, bundle, model, batch, w);
    };

    for (int64_t epoch = 0; epoch < opt.epochs && !result.aborted; ++epoch) {
        Rng erng = root.fork(uint64_t(epoch) + 1);
        auto plan = plan_batches(train_prep.size(), opt.batch_size, erng);
        std::vector<double> ep_sup, ep_ic, ep_bc, ep_pde, ep_total;
        const std::set<std::string> frozen = frozen_blocks(bundle, sched, false);
        try {
            for (const auto& batch_idx : plan) {
                std::vector<const HeatPrepared*> sets;
                std::vector<nn::SensorWindow> windows;
                for (size_t i : batch_idx) {
                    sets.push_back(&train_prep[i]);
                    windows.push_back(heat_window_prefix(train_prep[i],
                                                         window_size_for(train_prep[i], erng)));
                }
                ad::Tape tape(nn::app_layout("heat"));
                nn::TapeModel model = nn::begin_model(tape, bundle, nn::pack_windows(windows));
                phys::HeatBatch batch = make_heat_batch(sets, bcfg, erng);
                phys::HeatWeights w{sched.b1, sched.b2, sched.b3, sched.b4};
                phys::LossParts parts = phys::build_heat_loss(tape, bundle, model, batch, w);
                if (!std::isfinite(parts.value("total")))
                    throw NumericError("train_heat: non-finite loss");
                tape.backward(parts.total);
                std::vector<Tensor> grads = collect_grads(tape, model);
                opt_step(adam, bundle, grads, sched.lr, opt.adam, frozen);
                ep_sup.push_back(parts.value("L_SUP"));
                ep_ic.push_back(parts.value("L_IC"));
                ep_bc.push_back(parts.value("L_BC"));
                ep_pde.push_back(parts.value("L_PDE"));
                ep_total.push_back(parts.value("total"));
            }
        } catch (const NumericError&) {
            result.aborted = true;
            bundle = last_good.bundle;
            sched = last_good.schedule;
        }
        if (result.aborted) break;

        heat_schedule_step(sched, sched_cfg, mean_of(ep_sup), mean_of(ep_ic));
        last_good = Checkpoint{bundle, sched, opt.config_hash, epoch + 1};

        if ((epoch + 1) % opt.log_every == 0 || epoch + 1 == opt.epochs) {
            HistoryRow row;
            row.epoch = epoch + 1;
            row.lr = sched.lr;
            row.values = {{"beta1", sched.b1},          {"L_SUP", mean_of(ep_sup)},
                          {"L_IC", mean_of(ep_ic)},     {"L_BC", mean_of(ep_bc)},
                          {"L_PDE", mean_of(ep_pde)},   {"total", mean_of(ep_total)}};
            double score;
            double tiebreak = mean_of(ep_pde);
            if (!val_prep.empty()) {
                phys::LossParts vparts = val_losses(root.fork(0x77aa + uint64_t(epoch)));
                row.values.emplace_back("val_L_SUP", vparts.value("L_SUP"));
                row.values.emplace_back("val_L_IC", vparts.value("L_IC"));
                row.values.emplace_back("val_L_PDE", vparts.value("L_PDE"));
                score = vparts.value("L_SUP") + vparts.value("L_IC");
                tiebreak = vparts.value("L_PDE");
            } else {
                score = mean_of(ep_total);
            }
            best.consider(score, tiebreak, bundle, sched, opt.config_hash, epoch + 1);
            result.history.push_back(std::move(row));
        }
    }
    result.last = Checkpoint{bundle, sched, opt.config_hash, sched.epoch};
    result.best = best.epoch >= 0 ? best.ckpt : result.last;
    result.best_epoch = best.epoch >= 0 ? best.epoch : sched.epoch;
    return result;
}

}  // namespace pinnse::train
