#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pinnse/tensor.hpp"

namespace pinnse::data {

/// One generated or ingested trajectory/field with its ground-truth
/// parameters and metadata. Self-describing; serializes to a container file
/// with a JSON header and little-endian float64 blobs.
struct Dataset {
    std::string app;  // rossler | ns | heat
    std::vector<std::pair<std::string, Tensor>> arrays;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, std::string>> meta;

    bool has_array(const std::string& name) const;
    const Tensor& array(const std::string& name) const;
    double scalar(const std::string& name) const;
    double scalar_or(const std::string& name, double fallback) const;
    void set_array(const std::string& name, Tensor t);
    void set_scalar(const std::string& name, double v);
};

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

/// Campaign index: files, split assignment, seeds, and rejected runs.
struct Manifest {
    std::string app;
    uint64_t seed = 0;
    std::vector<std::string> files;   // relative to the manifest directory
    std::vector<std::string> splits;  // train | val | test, parallel to files
    std::vector<std::string> rejected;
    std::string config_json;  // resolved generation config

    std::vector<std::string> files_in_split(const std::string& split) const;
};

void write_manifest(const Manifest& m, const std::string& path);
Manifest read_manifest(const std::string& path);

/// Hash used to tie checkpoints to configs and to detect corruption.
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 1469598103934665603ULL);

}  // namespace pinnse::data
