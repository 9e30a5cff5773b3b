#include "plgan/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

#include "plgan/checkpoint.hpp"
#include "plgan/dataio.hpp"
#include "plgan/errors.hpp"
#include "plgan/image_io.hpp"
#include "plgan/networks.hpp"
#include "plgan/runconfig.hpp"
#include "plgan/trainer.hpp"

namespace fs = std::filesystem;

namespace plgan {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Base images only; mask/pl/overlay artifacts produced by this tool are
// excluded so a prepared dataset directory can be fed back in directly.
std::vector<fs::path> list_base_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || !is_image_file(e.path())) continue;
        const std::string stem = e.path().stem().string();
        if (has_suffix(stem, "_mask") || has_suffix(stem, "_pl") || has_suffix(stem, "_overlay"))
            continue;
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

void write_triplet(const fs::path& out_dir, const Sample& s) {
    write_png(out_dir / (s.id + ".png"), tensor_to_image(s.image));
    write_png(out_dir / (s.id + "_mask.png"), mask_to_image(s.mask));
    write_png(out_dir / (s.id + "_pl.png"), tensor_to_image(s.pl_highlighted));
}

// Relative paths keep the output directory relocatable; the reader resolves
// them against the manifest's own location.
DatasetManifest triplet_manifest(const std::vector<std::string>& ids,
                                 const std::vector<std::string>& class_filter) {
    DatasetManifest m;
    m.class_filter = class_filter;
    for (const std::string& id : ids)
        m.entries.push_back({fs::path(id + ".png"), fs::path(id + "_mask.png")});
    return m;
}

void run_parallel(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_threads = std::min<std::size_t>(hw, n);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (std::size_t t = 0; t < n_threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

Tensor load_mask_png(const fs::path& p) { return mask_from_image(read_image(p)); }

} // namespace

int cmd_prepare(const PrepareArgs& args) {
    if (args.size < 1) throw ConfigError("size must be >= 1");
    const std::vector<fs::path> images = list_base_images(args.images_dir);
    if (images.empty()) throw DataError("no images found in " + args.images_dir.string());

    fs::create_directories(args.out_dir);
    std::vector<std::string> ids;
    std::vector<std::pair<std::string, std::string>> skipped;
    for (const fs::path& img : images) {
        const std::string stem = img.stem().string();
        fs::path anno = args.annotations_dir / (stem + ".json");
        if (!fs::exists(anno)) anno = args.annotations_dir / (stem + ".png");
        if (!fs::exists(anno)) {
            skipped.emplace_back(img.string(), "no annotation named " + stem + ".json or .png");
            continue;
        }
        try {
            Sample s = load_sample({img, anno}, args.classes, args.size);
            write_triplet(args.out_dir, s);
            ids.push_back(s.id);
        } catch (const Error& e) {
            skipped.emplace_back(img.string(), e.what());
        }
    }
    if (ids.empty()) throw DataError("no sample could be prepared (all inputs skipped)");

    DatasetManifest manifest = triplet_manifest(ids, args.classes);
    write_manifest(args.out_dir / "manifest.tsv", manifest);
    if (args.train_ratio >= 0.0) {
        auto [train, test] = split_dataset(manifest, args.train_ratio);
        write_manifest(args.out_dir / "train.tsv", train);
        write_manifest(args.out_dir / "test.tsv", test);
    }

    std::ofstream report(args.out_dir / "skipped_files.txt", std::ios::trunc);
    for (const auto& [path, reason] : skipped) report << path << '\t' << reason << '\n';
    std::cout << "prepared " << ids.size() << " samples, skipped " << skipped.size() << '\n';
    if (!skipped.empty()) {
        std::cerr << "warning: " << skipped.size() << " input(s) skipped, see "
                  << (args.out_dir / "skipped_files.txt").string() << '\n';
        return 2;
    }
    return 0;
}

int cmd_synth(const SynthArgs& args) {
    if (args.n < 0) throw ConfigError("n must be >= 0");
    fs::create_directories(args.out_dir);
    const std::vector<Sample> samples = synth_thin_lines(args.n, args.size, args.width, args.seed);
    std::vector<std::string> ids;
    for (const Sample& s : samples) {
        write_triplet(args.out_dir, s);
        ids.push_back(s.id);
    }
    write_manifest(args.out_dir / "manifest.tsv", triplet_manifest(ids, {}));
    std::cout << "wrote " << 3 * samples.size() << " images and manifest.tsv to "
              << args.out_dir.string() << '\n';
    return 0;
}

int cmd_train(const TrainArgs& args) {
    RunConfig rc = args.config_file.empty() ? RunConfig{} : read_run_config(args.config_file);
    for (const auto& [key, value] : args.overrides) set_run_config_key(rc, key, value);
    rc.train.validate();

    const fs::path manifest_path =
        fs::is_directory(args.data) ? args.data / "manifest.tsv" : args.data;
    DatasetManifest manifest = read_manifest(manifest_path);
    manifest.class_filter = rc.class_filter;

    fs::create_directories(args.out_dir);
    {
        std::ofstream cfg_out(args.out_dir / "config.txt", std::ios::trunc);
        cfg_out << run_config_canonical(rc);
    }
    std::ofstream log(args.out_dir / "train_log.jsonl",
                      args.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw DataError("cannot open training log in " + args.out_dir.string());

    const fs::path final_ckpt =
        fit(manifest, rc.train, args.out_dir / "checkpoints", &log, args.resume);
    std::cout << final_ckpt.string() << '\n';
    return 0;
}

int cmd_predict(const PredictArgs& args) {
    if (!(args.threshold > 0.0 && args.threshold < 1.0))
        throw ConfigError("threshold must lie in (0,1)");
    CheckpointData data = load_checkpoint(args.checkpoint);
    NetworkBundle nets = build_networks(data.meta.spec);
    restore_networks(nets, data.arrays);
    const Ablation ablation = ablation_from_string(data.meta.ablation);

    const std::vector<fs::path> images = list_base_images(args.images_dir);
    if (images.empty()) throw DataError("no input images in " + args.images_dir.string());
    fs::create_directories(args.out_dir);

    // The networks are shared read-only across threads: inference forwards
    // (no tape) touch no parameter or running-statistic state.
    run_parallel(images.size(), [&](std::size_t i) {
        Tensor image = image_to_tensor(read_image(images[i]));
        if (args.size > 0)
            image = resize_bilinear(image, args.size, args.size);
        require_divisible(data.meta.spec, static_cast<int>(image.dim(1)),
                          static_cast<int>(image.dim(2)));
        const Tensor prob = ablation_prob_map(nets, ablation, image);
        const Tensor mask = binarize(prob, static_cast<float>(args.threshold));
        write_png(args.out_dir / (images[i].stem().string() + "_mask.png"),
                  mask_to_image(mask));
    });
    std::cout << "wrote " << images.size() << " masks to " << args.out_dir.string() << '\n';
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    const std::vector<fs::path> pred_files = list_pngs(args.pred_dir);
    if (pred_files.empty()) throw DataError("no predictions in " + args.pred_dir.string());

    std::vector<Tensor> preds(pred_files.size()), gts(pred_files.size());
    std::vector<std::string> ids(pred_files.size());
    run_parallel(pred_files.size(), [&](std::size_t i) {
        const fs::path gt_path = args.gt_dir / pred_files[i].filename();
        if (!fs::exists(gt_path))
            throw DataError("no ground truth for " + pred_files[i].filename().string() + " in " +
                            args.gt_dir.string());
        preds[i] = load_mask_png(pred_files[i]);
        gts[i] = load_mask_png(gt_path);
        ids[i] = pred_files[i].stem().string();
    });

    const MetricsReport report = evaluate_dataset(preds, gts, args.eval, ids);
    fs::path csv_path = args.report_file;
    csv_path.replace_extension(".csv");
    if (args.report_file.has_parent_path()) fs::create_directories(args.report_file.parent_path());
    {
        std::ofstream out(args.report_file, std::ios::trunc);
        if (!out) throw DataError("cannot write report to " + args.report_file.string());
        out << metrics_report_json(report) << '\n';
    }
    {
        std::ofstream out(csv_path, std::ios::trunc);
        out << metrics_report_csv(report);
    }
    std::cout << metrics_report_json(report) << '\n';
    return 0;
}

int cmd_overlay(const OverlayArgs& args) {
    if (args.tolerance < 0.0) throw ConfigError("tolerance must be >= 0");
    const std::vector<fs::path> pred_files = list_pngs(args.pred_dir);
    if (pred_files.empty()) throw DataError("no predictions in " + args.pred_dir.string());
    fs::create_directories(args.out_dir);

    std::vector<std::string> errors(pred_files.size());
    const double d2 = args.tolerance * args.tolerance + 1e-9;
    run_parallel(pred_files.size(), [&](std::size_t i) {
        const std::string file = pred_files[i].filename().string();
        std::string stem = pred_files[i].stem().string();
        if (has_suffix(stem, "_mask")) stem.resize(stem.size() - 5);
        try {
            const fs::path gt_path = args.gt_dir / file;
            if (!fs::exists(gt_path)) throw DataError("no ground truth named " + file);
            fs::path img_path;
            for (const char* ext : {".png", ".jpg", ".jpeg"}) {
                fs::path candidate = args.images_dir / (stem + ext);
                if (fs::exists(candidate)) { img_path = candidate; break; }
            }
            if (img_path.empty()) throw DataError("no base image named " + stem + ".png/.jpg");

            const Tensor pred = load_mask_png(pred_files[i]);
            const Tensor gt = load_mask_png(gt_path);
            require_same_shape(pred, gt, "pred/gt masks");
            ImageU8 base = read_image(img_path);
            const int h = static_cast<int>(pred.dim(0)), w = static_cast<int>(pred.dim(1));
            if (base.height != h || base.width != w)
                throw DataError("image is " + std::to_string(base.width) + "x" +
                                std::to_string(base.height) + ", masks are " +
                                std::to_string(w) + "x" + std::to_string(h));

            const Tensor dt_gt = squared_euclidean_dt(gt);
            const Tensor dt_pred = squared_euclidean_dt(pred);
            ImageU8 out;
            out.height = h;
            out.width = w;
            out.channels = 3;
            out.pixels.resize(static_cast<std::size_t>(h) * w * 3);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
                    for (int c = 0; c < 3; ++c) {
                        const std::uint8_t v =
                            base.channels == 1 ? base.at(y, x, 0) : base.at(y, x, c);
                        out.pixels[o + c] = static_cast<std::uint8_t>(v * 2 / 5);
                    }
                    if (pred.at(y, x) != 0.0f) {
                        const bool matched = dt_gt.at(y, x) <= d2;
                        out.pixels[o + 0] = matched ? 0 : 255;
                        out.pixels[o + 1] = matched ? 255 : 0;
                        out.pixels[o + 2] = 0;
                    } else if (gt.at(y, x) != 0.0f && dt_pred.at(y, x) > d2) {
                        out.pixels[o + 0] = 0;
                        out.pixels[o + 1] = 0;
                        out.pixels[o + 2] = 255;
                    }
                }
            write_png(args.out_dir / (stem + "_overlay.png"), out);
        } catch (const Error& e) {
            errors[i] = file + ": " + e.what();
        }
    });

    int n_errors = 0;
    for (const std::string& e : errors)
        if (!e.empty()) {
            std::cerr << "error: " << e << '\n';
            ++n_errors;
        }
    std::cout << "wrote " << (pred_files.size() - n_errors) << " overlays to "
              << args.out_dir.string() << '\n';
    return n_errors == 0 ? 0 : 2;
}

} // namespace plgan
