#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "plgan/dataio.hpp"
#include "plgan/metrics.hpp"
#include "plgan/trainer.hpp"

namespace plgan {

// Everything a run needs beyond the dataset: training hyperparameters,
// evaluation settings, the binarization threshold and the annotation class
// filter.
struct RunConfig {
    TrainConfig train;
    EvalConfig eval;
    double threshold = 0.5;
    std::vector<std::string> class_filter = kDefaultClassFilter;
};

// Flat `key = value` text, one setting per line; `#` starts a comment and
// blank lines are ignored. Every key is optional and overrides the default;
// an unknown key raises ConfigError naming it.
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::filesystem::path& path);

// Applies one `key = value` setting; ConfigError on unknown key or bad value.
void set_run_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

// The full key set in canonical order (CLI flags mirror it 1:1).
const std::vector<std::string>& run_config_keys();

// Fixed key order, doubles at max_digits10, so parse(canonical(c)) == c.
std::string run_config_canonical(const RunConfig& cfg);
std::string train_config_canonical(const TrainConfig& cfg);

std::uint64_t fnv1a64(std::string_view s);

// 16 hex digits of fnv1a64(train_config_canonical(cfg)); stored in
// checkpoints to tie them to the settings that produced them.
std::string config_hash_hex(const TrainConfig& cfg);

} // namespace plgan
