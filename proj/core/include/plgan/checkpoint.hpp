#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plgan/networks.hpp"
#include "plgan/tensor.hpp"

namespace plgan {

struct CheckpointMeta {
    GeneratorSpec spec;
    int epoch = -1;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string ablation = "full";
    std::int64_t adam_g_steps = 0;
    std::int64_t adam_d_steps = 0;
    std::int64_t adam_dt_steps = 0;
};

struct NamedArray {
    std::string name;
    Tensor tensor;
};

struct CheckpointData {
    CheckpointMeta meta;
    std::vector<NamedArray> arrays;
};

// Single-file archive: magic/version header, a JSON metadata record, then
// named float32 arrays (name, dims, raw little-endian data). Writes go to a
// temp file in the same directory and are renamed into place.
void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const std::vector<NamedArray>& arrays);

CheckpointData load_checkpoint(const std::filesystem::path& path);

// All parameters and normalization running statistics, in bundle order.
std::vector<NamedArray> snapshot_networks(NetworkBundle& nets);

// Restores every parameter/buffer of `nets` from `arrays` by name. A missing
// name or a shape mismatch raises DataError describing the difference; extra
// arrays (e.g. optimizer state) are ignored.
void restore_networks(NetworkBundle& nets, const std::vector<NamedArray>& arrays);

} // namespace plgan
