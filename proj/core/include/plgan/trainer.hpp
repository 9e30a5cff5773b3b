#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plgan/dataio.hpp"
#include "plgan/hough.hpp"
#include "plgan/losses.hpp"
#include "plgan/networks.hpp"

namespace plgan {

// Training variants. G_only trains the generator to emit semantic images
// directly against D; G_S adds the semantic decoder and its cross-entropy;
// G_S_HT adds the Hough loss; full adds the transformed branch with D^t and
// the geometry losses.
enum class Ablation { G_only, G_S, G_S_HT, full };
Ablation ablation_from_string(const std::string& name);
std::string to_string(Ablation a);

struct TrainConfig {
    int epochs = 200;
    double lr0 = 1e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int batch_size = 1;
    int grad_accum = 1;
    int image_size = 512;
    std::uint64_t seed = 0;
    Ablation ablation = Ablation::full;
    TransformKind transform = TransformKind::rot90cw;
    int checkpoint_every = 50;
    LossWeights weights;
    HoughConfig hough;
    GeneratorSpec net;
    InitKind init = InitKind::gaussian;

    void validate() const; // epochs even and > 0, lr0 > 0, sizes positive, ...
};

// lr0 for the first half of training, then linear decay reaching 0 at the
// final epoch: lr0 * (1 - (e - epochs/2 + 1) / (epochs/2)).
double lr_at_epoch(int e, const TrainConfig& cfg);

class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);

    // One optimizer step: updates D (and D^t in full mode) on real vs detached
    // fake, then updates G and S on fresh discriminator scores. `step_samples`
    // holds up to batch_size * grad_accum samples, processed as micro-batches
    // of batch_size with gradients accumulated across them.
    LossBreakdown train_step(const std::vector<const Sample*>& step_samples, double lr);

    void save(const std::filesystem::path& path, int epoch);
    void restore(const std::filesystem::path& path);

    int last_epoch() const { return last_epoch_; }
    NetworkBundle& networks() { return nets_; }
    const TrainConfig& config() const { return cfg_; }
    nn::Adam& optimizer_g() { return opt_g_; }
    nn::Adam& optimizer_d() { return opt_d_; }
    nn::Adam& optimizer_dt() { return opt_dt_; }

private:
    TrainConfig cfg_;
    NetworkBundle nets_;
    nn::Adam opt_g_, opt_d_, opt_dt_;
    int last_epoch_ = -1;
};

// Trains on all samples of the manifest (loaded at cfg.image_size) or on
// in-memory samples. Deterministic batch order given cfg.seed; writes
// checkpoints under out_dir every checkpoint_every epochs plus final.ckpt,
// emits one JSON LossBreakdown record per step to `log`, and returns the
// final checkpoint path. `resume_from` restores parameters and optimizer
// state and continues after the checkpoint's epoch.
std::filesystem::path fit(const DatasetManifest& manifest, const TrainConfig& cfg,
                          const std::filesystem::path& out_dir, std::ostream* log = nullptr,
                          const std::optional<std::filesystem::path>& resume_from = {});
std::filesystem::path fit_samples(const std::vector<Sample>& samples, const TrainConfig& cfg,
                                  const std::filesystem::path& out_dir,
                                  std::ostream* log = nullptr,
                                  const std::optional<std::filesystem::path>& resume_from = {});

// Evaluation-time probability map for a trained bundle: the semantic decoder
// path normally; under G_only the generator output itself, averaged over
// channels and rescaled from [-1,1] to [0,1].
Tensor ablation_prob_map(NetworkBundle& nets, Ablation ablation, const Tensor& image);

// Weights actually applied under an ablation (disabled terms zeroed).
LossWeights effective_weights(const TrainConfig& cfg);

std::string log_record(int step, int epoch, double lr, const LossBreakdown& lb);

} // namespace plgan
