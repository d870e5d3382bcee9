#include "pinnse/bundle_io.hpp"

#include <json.hpp>

namespace pinnse::nn {

using nlohmann::json;

namespace {

json mlp_to_json(const MlpSpec& m) {
    json j;
    j["widths"] = m.widths;
    j["act"] = activation_name(m.act);
    j["final_linear"] = m.final_linear;
    j["act_const"] = m.act_const;
    return j;
}

MlpSpec mlp_from_json(const json& j) {
    MlpSpec m;
    m.widths = j.at("widths").get<std::vector<int>>();
    m.act = activation_from(j.at("act").get<std::string>());
    m.final_linear = j.value("final_linear", true);
    m.act_const = j.value("act_const", 3.14);
    return m;
}

json scales_to_json(const std::vector<AffineScale>& v) {
    json j = json::array();
    for (const auto& s : v) j.push_back({s.offset, s.scale});
    return j;
}

std::vector<AffineScale> scales_from_json(const json& j) {
    std::vector<AffineScale> out;
    for (const auto& e : j) out.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    return out;
}

}  // namespace

std::string bundle_spec_to_json(const BundleSpec& spec) {
    json j;
    j["app"] = spec.app;
    j["encoder"] = mlp_to_json(spec.encoder);
    j["pooling"] = pool_kind_name(spec.pooling);
    if (spec.post_pool) j["post_pool"] = mlp_to_json(*spec.post_pool);
    if (spec.qp_encoder) j["qp_encoder"] = mlp_to_json(*spec.qp_encoder);
    if (spec.rff) {
        j["rff"] = {{"input_dim", spec.rff->input_dim},
                    {"n_freq", spec.rff->n_freq},
                    {"sigma", spec.rff->sigma},
                    {"seed", spec.rff->seed}};
    }
    json heads = json::array();
    for (const auto& h : spec.heads) heads.push_back(mlp_to_json(h));
    j["heads"] = heads;
    j["combine"] = spec.combine == HeadCombine::sum ? "sum" : "concat";
    if (spec.ident) j["ident"] = mlp_to_json(*spec.ident);
    j["ident_on_encoder_output"] = spec.ident_on_encoder_output;
    j["window_scale"] = scales_to_json(spec.window_scale);
    j["qp_scale"] = scales_to_json(spec.qp_scale);
    j["out_scale"] = scales_to_json(spec.out_scale);
    j["ident_scale"] = scales_to_json(spec.ident_scale);
    return j.dump();
}

BundleSpec bundle_spec_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    PINNSE_CHECK_DATA(!j.is_discarded(), "malformed bundle spec json");
    BundleSpec spec;
    spec.app = j.value("app", "");
    spec.encoder = mlp_from_json(j.at("encoder"));
    spec.pooling = pool_kind_from(j.at("pooling").get<std::string>());
    if (j.contains("post_pool")) spec.post_pool = mlp_from_json(j["post_pool"]);
    if (j.contains("qp_encoder")) spec.qp_encoder = mlp_from_json(j["qp_encoder"]);
    if (j.contains("rff")) {
        RffSpec r;
        r.input_dim = j["rff"].at("input_dim").get<int>();
        r.n_freq = j["rff"].at("n_freq").get<int>();
        r.sigma = j["rff"].at("sigma").get<double>();
        r.seed = j["rff"].at("seed").get<uint64_t>();
        spec.rff = r;
    }
    for (const auto& h : j.at("heads")) spec.heads.push_back(mlp_from_json(h));
    spec.combine =
        j.value("combine", "sum") == std::string("sum") ? HeadCombine::sum : HeadCombine::concat;
    if (j.contains("ident")) spec.ident = mlp_from_json(j["ident"]);
    spec.ident_on_encoder_output = j.value("ident_on_encoder_output", false);
    spec.window_scale = scales_from_json(j.at("window_scale"));
    spec.qp_scale = scales_from_json(j.at("qp_scale"));
    spec.out_scale = scales_from_json(j.at("out_scale"));
    spec.ident_scale = scales_from_json(j.value("ident_scale", json::array()));
    return spec;
}

}  // namespace pinnse::nn
