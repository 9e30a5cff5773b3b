#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plgan/dataio.hpp"
#include "plgan/metrics.hpp"

namespace plgan {

// Batch command implementations behind the CLI. Each returns a process exit
// code (0 success, 2 data warning/error where noted) and throws ConfigError/
// DataError/NumericError for the failures the CLI maps to exit codes.

struct PrepareArgs {
    std::filesystem::path images_dir;
    std::filesystem::path annotations_dir;
    std::filesystem::path out_dir;
    int size = 512;
    std::vector<std::string> classes = kDefaultClassFilter;
    double train_ratio = -1.0; // < 0: write only the combined manifest
};
// Pairs every image with <stem>.json or <stem>.png in annotations_dir, writes
// <id>.png / <id>_mask.png / <id>_pl.png triplets plus manifest.tsv (and
// train.tsv/test.tsv when train_ratio is set). Unreadable annotations go to
// skipped_files.txt; any skip turns the exit code into 2.
int cmd_prepare(const PrepareArgs& args);

struct SynthArgs {
    int n = 64;
    int size = 128;
    int width = 1;
    std::uint64_t seed = 7;
    std::filesystem::path out_dir;
};
int cmd_synth(const SynthArgs& args);

struct TrainArgs {
    std::filesystem::path config_file; // empty: defaults
    std::vector<std::pair<std::string, std::string>> overrides;
    std::filesystem::path data; // manifest file or directory holding manifest.tsv
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> resume;
};
// Writes out_dir/config.txt (canonical effective config), train_log.jsonl and
// checkpoints/; prints the final checkpoint path.
int cmd_train(const TrainArgs& args);

struct PredictArgs {
    std::filesystem::path checkpoint;
    std::filesystem::path images_dir;
    std::filesystem::path out_dir;
    double threshold = 0.5;
    int size = 0; // > 0: resize inputs first
};
// One <stem>_mask.png per input image, from the embedder + semantic decoder
// only (generator head for G_only checkpoints).
int cmd_predict(const PredictArgs& args);

struct EvalArgs {
    std::filesystem::path pred_dir;
    std::filesystem::path gt_dir;
    std::filesystem::path report_file;
    EvalConfig eval;
};
// Pairs every PNG in pred_dir with the same name in gt_dir; writes the report
// as JSON plus a CSV twin next to it.
int cmd_eval(const EvalArgs& args);

struct OverlayArgs {
    std::filesystem::path pred_dir;
    std::filesystem::path gt_dir;
    std::filesystem::path images_dir;
    std::filesystem::path out_dir;
    double tolerance = 2.0;
};
// Dimmed base image with relaxed true positives green, false positives red,
// false negatives blue. Per-file errors are reported and yield exit code 2.
int cmd_overlay(const OverlayArgs& args);

} // namespace plgan
