#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "plgan/commands.hpp"
#include "plgan/errors.hpp"
#include "plgan/metrics.hpp"
#include "plgan/runconfig.hpp"

int main(int argc, char** argv) {
    CLI::App app{"power-line segmentation: data preparation, GAN training, inference, evaluation"};
    app.require_subcommand(1);

    plgan::PrepareArgs prep;
    auto* prepare = app.add_subcommand("prepare", "rasterize annotated images into PNG triplets");
    prepare->add_option("--images", prep.images_dir, "image directory")->required();
    prepare->add_option("--annotations", prep.annotations_dir,
                        "directory of <stem>.json polygon files or <stem>.png masks")
        ->required();
    prepare->add_option("--out", prep.out_dir, "output directory")->required();
    prepare->add_option("--size", prep.size, "square resize target (512)");
    prepare->add_option("--classes", prep.classes, "labels to rasterize, prefix-matched (cable)")
        ->delimiter(',');
    prepare->add_option("--train-ratio", prep.train_ratio,
                        "also write train.tsv/test.tsv split at this ratio");

    plgan::SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic thin-line dataset");
    synth_cmd->add_option("--n", synth.n, "number of samples (64)");
    synth_cmd->add_option("--size", synth.size, "image side in pixels (128)");
    synth_cmd->add_option("--width", synth.width, "line width in pixels (1)");
    synth_cmd->add_option("--seed", synth.seed, "generator seed (7)");
    synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();

    plgan::TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train on a prepared dataset");
    train_cmd->add_option("--config", train.config_file, "key = value config file");
    train_cmd->add_option("--data", train.data, "manifest file or directory with manifest.tsv")
        ->required();
    train_cmd->add_option("--out", train.out_dir, "run directory for log and checkpoints")
        ->required();
    train_cmd->add_option("--resume", [&train](const CLI::results_t& res) {
        train.resume = res[0];
        return true;
    }, "checkpoint to continue from")->type_name("FILE");
    for (const std::string& key : plgan::run_config_keys())
        train_cmd->add_option("--" + key, [key, &train](const CLI::results_t& res) {
            train.overrides.emplace_back(key, res[0]);
            return true;
        }, "override config key " + key)->type_name("VALUE");

    plgan::PredictArgs pred;
    auto* predict = app.add_subcommand("predict", "write one mask PNG per input image");
    predict->add_option("--checkpoint", pred.checkpoint, "trained checkpoint")->required();
    predict->add_option("--images", pred.images_dir, "input image directory")->required();
    predict->add_option("--out", pred.out_dir, "output directory")->required();
    predict->add_option("--threshold", pred.threshold, "binarization threshold (0.5)");
    predict->add_option("--size", pred.size, "resize inputs to this side first (0 = keep)");

    plgan::EvalArgs eval;
    std::string eval_agg = "micro", eval_dist = "euclidean";
    auto* eval_cmd = app.add_subcommand("eval", "score predicted masks against ground truth");
    eval_cmd->add_option("--pred", eval.pred_dir, "predicted mask directory")->required();
    eval_cmd->add_option("--gt", eval.gt_dir, "ground-truth mask directory")->required();
    eval_cmd->add_option("--report", eval.report_file, "JSON report path (CSV twin alongside)")
        ->required();
    eval_cmd->add_option("--tolerance", eval.eval.tolerance_px, "relaxation distance (2)");
    eval_cmd->add_option("--beta", eval.eval.beta, "F-beta weighting (0.3)");
    eval_cmd->add_option("--aggregation", eval_agg, "micro or macro");
    eval_cmd->add_option("--distance", eval_dist, "euclidean or chebyshev");

    plgan::OverlayArgs overlay;
    auto* overlay_cmd = app.add_subcommand("overlay", "render error overlays");
    overlay_cmd->add_option("--pred", overlay.pred_dir, "predicted mask directory")->required();
    overlay_cmd->add_option("--gt", overlay.gt_dir, "ground-truth mask directory")->required();
    overlay_cmd->add_option("--images", overlay.images_dir, "base image directory")->required();
    overlay_cmd->add_option("--out", overlay.out_dir, "output directory")->required();
    overlay_cmd->add_option("--tolerance", overlay.tolerance, "relaxation distance (2)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (prepare->parsed()) return plgan::cmd_prepare(prep);
        if (synth_cmd->parsed()) return plgan::cmd_synth(synth);
        if (train_cmd->parsed()) return plgan::cmd_train(train);
        if (predict->parsed()) return plgan::cmd_predict(pred);
        if (eval_cmd->parsed()) {
            eval.eval.aggregation = plgan::aggregation_from_string(eval_agg);
            eval.eval.distance = plgan::pixel_distance_from_string(eval_dist);
            return plgan::cmd_eval(eval);
        }
        if (overlay_cmd->parsed()) return plgan::cmd_overlay(overlay);
    } catch (const plgan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const plgan::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const plgan::Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
