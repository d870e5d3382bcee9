#include "pinnse/datasets.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace pinnse::data {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "dataset container assumes a little-endian host");

bool Dataset::has_array(const std::string& name) const {
    for (const auto& [k, v] : arrays)
        if (k == name) return true;
    return false;
}

const Tensor& Dataset::array(const std::string& name) const {
    for (const auto& [k, v] : arrays)
        if (k == name) return v;
    throw DataError("dataset: no array named " + name);
}

double Dataset::scalar(const std::string& name) const {
    for (const auto& [k, v] : scalars)
        if (k == name) return v;
    throw DataError("dataset: no scalar named " + name);
}

double Dataset::scalar_or(const std::string& name, double fallback) const {
    for (const auto& [k, v] : scalars)
        if (k == name) return v;
    return fallback;
}

void Dataset::set_array(const std::string& name, Tensor t) {
    for (auto& [k, v] : arrays)
        if (k == name) {
            v = std::move(t);
            return;
        }
    arrays.emplace_back(name, std::move(t));
}

void Dataset::set_scalar(const std::string& name, double v) {
    for (auto& [k, x] : scalars)
        if (k == name) {
            x = v;
            return;
        }
    scalars.emplace_back(name, v);
}

namespace {
constexpr char kMagic[8] = {'P', 'S', 'E', 'D', '0', '0', '0', '1'};
}

void write_dataset(const Dataset& ds, const std::string& path) {
    json header;
    header["format_version"] = 1;
    header["app"] = ds.app;
    json scalars = json::object();
    for (const auto& [k, v] : ds.scalars) scalars[k] = v;
    header["scalars"] = scalars;
    json meta = json::object();
    for (const auto& [k, v] : ds.meta) meta[k] = v;
    header["meta"] = meta;
    json arrays = json::array();
    uint64_t offset = 0;
    for (const auto& [name, t] : ds.arrays) {
        json a;
        a["name"] = name;
        a["shape"] = t.shape();
        a["offset"] = offset;
        a["dtype"] = "f64le";
        arrays.push_back(a);
        offset += uint64_t(t.numel()) * sizeof(double);
    }
    header["arrays"] = arrays;
    const std::string htxt = header.dump();

    std::ofstream f(path, std::ios::binary);
    PINNSE_CHECK_DATA(f.good(), "cannot open for writing: " + path);
    f.write(kMagic, 8);
    const uint64_t hlen = htxt.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(htxt.data(), std::streamsize(htxt.size()));
    for (const auto& [name, t] : ds.arrays)
        f.write(reinterpret_cast<const char*>(t.data()),
                std::streamsize(size_t(t.numel()) * sizeof(double)));
    PINNSE_CHECK_DATA(f.good(), "write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    PINNSE_CHECK_DATA(f.good(), "cannot open dataset: " + path);
    char magic[8];
    f.read(magic, 8);
    PINNSE_CHECK_DATA(f.good() && std::memcmp(magic, kMagic, 8) == 0,
                      "not a dataset container: " + path);
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    PINNSE_CHECK_DATA(f.good() && hlen < (1ULL << 24), "corrupt dataset header: " + path);
    std::string htxt(hlen, '\0');
    f.read(htxt.data(), std::streamsize(hlen));
    json header = json::parse(htxt, nullptr, false);
    PINNSE_CHECK_DATA(!header.is_discarded(), "malformed dataset header: " + path);
    PINNSE_CHECK_DATA(header.value("format_version", 0) == 1,
                      "unsupported dataset format version in " + path);

    Dataset ds;
    ds.app = header.value("app", "");
    for (auto it = header["scalars"].begin(); it != header["scalars"].end(); ++it)
        ds.scalars.emplace_back(it.key(), it.value().get<double>());
    for (auto it = header["meta"].begin(); it != header["meta"].end(); ++it)
        ds.meta.emplace_back(it.key(), it.value().get<std::string>());
    for (const auto& a : header["arrays"]) {
        Shape shape = a["shape"].get<Shape>();
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.data()),
               std::streamsize(size_t(t.numel()) * sizeof(double)));
        PINNSE_CHECK_DATA(f.good(), "dataset truncated: " + path);
        ds.arrays.emplace_back(a["name"].get<std::string>(), std::move(t));
    }
    return ds;
}

std::vector<std::string> Manifest::files_in_split(const std::string& split) const {
    std::vector<std::string> out;
    for (size_t i = 0; i < files.size(); ++i)
        if (splits[i] == split) out.push_back(files[i]);
    return out;
}

void write_manifest(const Manifest& m, const std::string& path) {
    json j;
    j["format_version"] = 1;
    j["app"] = m.app;
    j["seed"] = m.seed;
    j["files"] = m.files;
    j["splits"] = m.splits;
    j["rejected"] = m.rejected;
    if (!m.config_json.empty())
        j["config"] = json::parse(m.config_json, nullptr, false);
    std::ofstream f(path);
    PINNSE_CHECK_DATA(f.good(), "cannot write manifest: " + path);
    f << j.dump(2) << "\n";
}

Manifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    PINNSE_CHECK_DATA(f.good(), "cannot open manifest: " + path);
    json j = json::parse(f, nullptr, false);
    PINNSE_CHECK_DATA(!j.is_discarded(), "malformed manifest: " + path);
    Manifest m;
    m.app = j.value("app", "");
    m.seed = j.value("seed", uint64_t(0));
    m.files = j.value("files", std::vector<std::string>{});
    m.splits = j.value("splits", std::vector<std::string>{});
    m.rejected = j.value("rejected", std::vector<std::string>{});
    if (j.contains("config")) m.config_json = j["config"].dump();
    PINNSE_CHECK_DATA(m.files.size() == m.splits.size(), "manifest files/splits mismatch");
    return m;
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace pinnse::data
