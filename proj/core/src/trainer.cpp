#include "plgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <unordered_map>
#include <utility>

#include <json.hpp>

#include "plgan/checkpoint.hpp"
#include "plgan/errors.hpp"
#include "plgan/geometry.hpp"
#include "plgan/nn.hpp"
#include "plgan/rng.hpp"
#include "plgan/runconfig.hpp"

namespace plgan {

Ablation ablation_from_string(const std::string& name) {
    if (name == "G_only" || name == "G") return Ablation::G_only;
    if (name == "G_S") return Ablation::G_S;
    if (name == "G_S_HT") return Ablation::G_S_HT;
    if (name == "full") return Ablation::full;
    throw ConfigError("unknown ablation: " + name + " (expected G_only, G_S, G_S_HT or full)");
}

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::G_only: return "G_only";
        case Ablation::G_S: return "G_S";
        case Ablation::G_S_HT: return "G_S_HT";
        case Ablation::full: return "full";
    }
    throw ConfigError("invalid ablation value");
}

void TrainConfig::validate() const {
    if (epochs <= 0 || epochs % 2 != 0)
        throw ConfigError("epochs must be positive and even, got " + std::to_string(epochs));
    if (!(lr0 > 0.0) || !std::isfinite(lr0))
        throw ConfigError("lr0 must be positive and finite");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ConfigError("adam betas must lie in [0,1)");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (grad_accum < 1) throw ConfigError("grad_accum must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    net.validate();
    if (image_size < 1 || image_size % net.spatial_divisor() != 0)
        throw ConfigError("image_size must be a positive multiple of " +
                          std::to_string(net.spatial_divisor()));
    weights.validate();
    hough.validate();
}

double lr_at_epoch(int e, const TrainConfig& cfg) {
    if (e < 0 || e >= cfg.epochs)
        throw ConfigError("epoch " + std::to_string(e) + " outside [0," +
                          std::to_string(cfg.epochs) + ")");
    const int half = cfg.epochs / 2;
    if (e < half) return cfg.lr0;
    return cfg.lr0 * (1.0 - static_cast<double>(e - half + 1) / half);
}

LossWeights effective_weights(const TrainConfig& cfg) {
    LossWeights w = cfg.weights;
    switch (cfg.ablation) {
        case Ablation::G_only: w.lambda_spl = 0.0; [[fallthrough]];
        case Ablation::G_S: w.lambda_ht = 0.0; [[fallthrough]];
        case Ablation::G_S_HT: w.lambda_geo = 0.0; break;
        case Ablation::full: break;
    }
    return w;
}

namespace {

// Per-micro-batch forward state. Tapes are captured by address inside layer
// backward closures, so this lives behind a unique_ptr and is never moved
// once a forward has run.
struct BranchState {
    Tensor input; // {B,C,H,W}
    Tensor gt;    // {B,1,H,W}
    Tensor real;  // {B,C,H,W} discriminator real input
    nn::Tape t_emb, t_head, t_sem;
    Tensor emb, fake, prob;
};

struct MicroState {
    std::unique_ptr<BranchState> r, t;
};

Tensor encode_mask_pm1(const Tensor& gt, int channels) {
    const int b = static_cast<int>(gt.dim(0));
    const int h = static_cast<int>(gt.dim(2));
    const int w = static_cast<int>(gt.dim(3));
    Tensor out({b, channels, h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int n = 0; n < b; ++n)
        for (int c = 0; c < channels; ++c)
            for (std::int64_t i = 0; i < hw; ++i)
                out[(static_cast<std::int64_t>(n) * channels + c) * hw + i] =
                    2.0f * gt[n * hw + i] - 1.0f;
    return out;
}

double lsgan_g_value(const Tensor& scores) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < scores.numel(); ++i) {
        const double d = static_cast<double>(scores[i]) - 1.0;
        acc += d * d;
    }
    return 0.5 * acc / static_cast<double>(scores.numel());
}

Tensor slice_plane(const Tensor& t, int n) {
    const int h = static_cast<int>(t.dim(2));
    const int w = static_cast<int>(t.dim(3));
    Tensor out({h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    std::copy_n(t.data() + n * hw, hw, out.data());
    return out;
}

void add_plane(Tensor& t, int n, const Tensor& g) {
    const std::int64_t hw = g.numel();
    float* dst = t.data() + n * hw;
    for (std::int64_t i = 0; i < hw; ++i) dst[i] += g[i];
}

} // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg),
      nets_((cfg.validate(), build_networks(cfg.net))),
      opt_g_(generator_side_params(nets_), cfg.adam_beta1, cfg.adam_beta2),
      opt_d_(nets_.disc.params(), cfg.adam_beta1, cfg.adam_beta2),
      opt_dt_(nets_.disc_t.params(), cfg.adam_beta1, cfg.adam_beta2) {
    init_weights(nets_, cfg_.seed, cfg_.init);
}

LossBreakdown Trainer::train_step(const std::vector<const Sample*>& step_samples, double lr) {
    if (step_samples.empty()) throw DataError("train_step called with no samples");
    const LossWeights w = effective_weights(cfg_);
    const bool use_sem = cfg_.ablation != Ablation::G_only;
    const bool use_ht = use_sem && cfg_.ablation != Ablation::G_S;
    const bool use_t = cfg_.ablation == Ablation::full;

    const int h = static_cast<int>(step_samples[0]->image.dim(1));
    const int ww = static_cast<int>(step_samples[0]->image.dim(2));
    require_divisible(cfg_.net, h, ww);
    if (use_t && requires_square(cfg_.transform) && h != ww)
        throw ShapeError("transform " + to_string(cfg_.transform) +
                         " needs square images, got " + std::to_string(h) + "x" +
                         std::to_string(ww));

    std::vector<std::vector<const Sample*>> chunks;
    for (std::size_t i = 0; i < step_samples.size(); i += cfg_.batch_size) {
        const std::size_t end = std::min(i + cfg_.batch_size, step_samples.size());
        chunks.emplace_back(step_samples.begin() + i, step_samples.begin() + end);
    }
    const double scale = 1.0 / static_cast<double>(chunks.size());

    opt_g_.zero_grad();
    opt_d_.zero_grad();
    if (use_t) opt_dt_.zero_grad();

    auto forward_branch = [&](BranchState& br) {
        br.emb = nets_.embedder.forward(br.input, &br.t_emb);
        br.fake = nets_.head.forward(br.emb, &br.t_head);
        if (use_sem) br.prob = nets_.semantic.forward(br.emb, &br.t_sem);
    };
    // Discriminator update gradients: real vs generator output, which is
    // detached simply by discarding the input gradient of these tapes.
    auto disc_phase = [&](nn::Sequential& disc, const BranchState& br) {
        nn::Tape tr, tf;
        Tensor s_real = disc.forward(br.real, &tr);
        Tensor s_fake = disc.forward(br.fake, &tf);
        tr.backward(lsgan_d_real_grad(s_real, scale));
        tf.backward(lsgan_d_fake_grad(s_fake, scale));
    };

    std::vector<MicroState> micros;
    micros.reserve(chunks.size());
    for (const auto& chunk : chunks) {
        const int b = static_cast<int>(chunk.size());
        MicroState ms;
        ms.r = std::make_unique<BranchState>();
        ms.r->input = Tensor({b, cfg_.net.in_channels, h, ww});
        ms.r->gt = Tensor({b, 1, h, ww});
        const std::int64_t chw = static_cast<std::int64_t>(cfg_.net.in_channels) * h * ww;
        const std::int64_t hw = static_cast<std::int64_t>(h) * ww;
        if (use_sem) ms.r->real = Tensor({b, cfg_.net.in_channels, h, ww});
        for (int n = 0; n < b; ++n) {
            const Sample& s = *chunk[n];
            if (s.image.dim(0) != cfg_.net.in_channels || s.image.dim(1) != h ||
                s.image.dim(2) != ww)
                throw ShapeError("sample " + s.id + " has shape " + s.image.shape_str() +
                                 ", batch expects {" + std::to_string(cfg_.net.in_channels) +
                                 "," + std::to_string(h) + "," + std::to_string(ww) + "}");
            std::copy_n(s.image.data(), chw, ms.r->input.data() + n * chw);
            std::copy_n(s.mask.data(), hw, ms.r->gt.data() + n * hw);
            if (use_sem)
                std::copy_n(s.pl_highlighted.data(), chw, ms.r->real.data() + n * chw);
        }
        if (!use_sem) ms.r->real = encode_mask_pm1(ms.r->gt, cfg_.net.out_channels);

        forward_branch(*ms.r);
        disc_phase(nets_.disc, *ms.r);

        if (use_t) {
            ms.t = std::make_unique<BranchState>();
            ms.t->input = apply_transform(ms.r->input, cfg_.transform);
            ms.t->gt = apply_transform(ms.r->gt, cfg_.transform);
            ms.t->real = apply_transform(ms.r->real, cfg_.transform);
            forward_branch(*ms.t);
            disc_phase(nets_.disc_t, *ms.t);
        }
        micros.push_back(std::move(ms));
    }
    opt_d_.step(lr);
    if (use_t) opt_dt_.step(lr);

    // Generator/semantic update on fresh discriminator scores; the frozen
    // discriminators pass gradients through without accumulating their own.
    LossBreakdown parts;
    for (MicroState& ms : micros) {
        BranchState& r = *ms.r;
        const int b = static_cast<int>(r.input.dim(0));

        nn::Tape td_r;
        td_r.accumulate_param_grads = false;
        Tensor s_r = nets_.disc.forward(r.fake, &td_r);
        parts.adv += lsgan_g_value(s_r) * scale;
        Tensor fake_grad_r = td_r.backward(lsgan_g_grad(s_r, scale));

        Tensor fake_grad_t;
        if (ms.t) {
            nn::Tape td_t;
            td_t.accumulate_param_grads = false;
            Tensor s_t = nets_.disc_t.forward(ms.t->fake, &td_t);
            parts.adv_t += lsgan_g_value(s_t) * scale;
            fake_grad_t = td_t.backward(lsgan_g_grad(s_t, scale));

            parts.pgeo += geometry_consistency_loss(r.fake, ms.t->fake, cfg_.transform) * scale;
            if (w.lambda_geo != 0.0)
                geometry_consistency_grads(r.fake, ms.t->fake, cfg_.transform,
                                           w.lambda_geo * scale, fake_grad_r, fake_grad_t);
        }

        Tensor prob_grad_r, prob_grad_t;
        if (use_sem) {
            parts.spl += semantic_loss(r.prob, r.gt) * scale;
            prob_grad_r = semantic_loss_grad(r.prob, r.gt, w.lambda_spl * scale);
            if (use_ht) {
                for (int n = 0; n < b; ++n) {
                    Tensor gt2 = slice_plane(r.gt, n);
                    Tensor pr2 = slice_plane(r.prob, n);
                    parts.ht += hough_loss(gt2, pr2, cfg_.hough) * scale / b;
                    if (w.lambda_ht != 0.0) {
                        Tensor g({h, ww});
                        hough_loss_grad(gt2, pr2, cfg_.hough, w.lambda_ht * scale / b, g);
                        add_plane(prob_grad_r, n, g);
                    }
                }
            }
            if (ms.t) {
                parts.spl_t += semantic_loss(ms.t->prob, ms.t->gt) * scale;
                prob_grad_t = semantic_loss_grad(ms.t->prob, ms.t->gt, w.lambda_spl * scale);
                if (use_ht) {
                    for (int n = 0; n < b; ++n) {
                        Tensor gt2 = slice_plane(ms.t->gt, n);
                        Tensor pr2 = slice_plane(ms.t->prob, n);
                        parts.ht_t += hough_loss(gt2, pr2, cfg_.hough) * scale / b;
                        if (w.lambda_ht != 0.0) {
                            Tensor g({h, ww});
                            hough_loss_grad(gt2, pr2, cfg_.hough, w.lambda_ht * scale / b, g);
                            add_plane(prob_grad_t, n, g);
                        }
                    }
                }
                parts.sgeo +=
                    geometry_consistency_loss(r.prob, ms.t->prob, cfg_.transform) * scale;
                if (w.lambda_geo != 0.0)
                    geometry_consistency_grads(r.prob, ms.t->prob, cfg_.transform,
                                               w.lambda_geo * scale, prob_grad_r, prob_grad_t);
            }
        }

        auto backward_branch = [&](BranchState& br, Tensor fake_grad, Tensor prob_grad) {
            Tensor demb = br.t_head.backward(std::move(fake_grad));
            if (use_sem) {
                Tensor ds = br.t_sem.backward(std::move(prob_grad));
                require_same_shape(demb, ds, "embedding gradients");
                for (std::int64_t i = 0; i < demb.numel(); ++i) demb[i] += ds[i];
            }
            br.t_emb.backward(std::move(demb));
        };
        backward_branch(r, std::move(fake_grad_r), std::move(prob_grad_r));
        if (ms.t) backward_branch(*ms.t, std::move(fake_grad_t), std::move(prob_grad_t));
    }
    opt_g_.step(lr);

    return total_generator_loss(parts, w);
}

void Trainer::save(const std::filesystem::path& path, int epoch) {
    CheckpointMeta meta;
    meta.spec = cfg_.net;
    meta.epoch = epoch;
    meta.seed = cfg_.seed;
    meta.config_hash = config_hash_hex(cfg_);
    meta.ablation = to_string(cfg_.ablation);
    meta.adam_g_steps = opt_g_.step_count();
    meta.adam_d_steps = opt_d_.step_count();
    meta.adam_dt_steps = opt_dt_.step_count();

    std::vector<NamedArray> arrays = snapshot_networks(nets_);
    auto push_opt = [&](nn::Adam& opt) {
        const auto& ps = opt.params();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            arrays.push_back({"adam.m." + ps[i]->name, opt.first_moment(i)});
            arrays.push_back({"adam.v." + ps[i]->name, opt.second_moment(i)});
        }
    };
    push_opt(opt_g_);
    push_opt(opt_d_);
    push_opt(opt_dt_);
    save_checkpoint(path, meta, arrays);
}

void Trainer::restore(const std::filesystem::path& path) {
    CheckpointData data = load_checkpoint(path);
    if (data.meta.ablation != to_string(cfg_.ablation))
        throw ConfigError("checkpoint was trained with ablation " + data.meta.ablation +
                          ", run is configured for " + to_string(cfg_.ablation));
    restore_networks(nets_, data.arrays);

    std::unordered_map<std::string, const Tensor*> by_name;
    for (const NamedArray& a : data.arrays) by_name[a.name] = &a.tensor;
    auto pull_opt = [&](nn::Adam& opt, std::int64_t steps) {
        const auto& ps = opt.params();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            for (const char* kind : {"m", "v"}) {
                const std::string name = std::string("adam.") + kind + "." + ps[i]->name;
                auto it = by_name.find(name);
                if (it == by_name.end())
                    throw DataError("checkpoint has no optimizer state " + name +
                                    "; it cannot be resumed from");
                Tensor& dst = kind[0] == 'm' ? opt.first_moment(i) : opt.second_moment(i);
                require_same_shape(dst, *it->second, name.c_str());
                dst = *it->second;
            }
        }
        opt.set_step_count(steps);
    };
    pull_opt(opt_g_, data.meta.adam_g_steps);
    pull_opt(opt_d_, data.meta.adam_d_steps);
    pull_opt(opt_dt_, data.meta.adam_dt_steps);
    last_epoch_ = data.meta.epoch;
}

std::string log_record(int step, int epoch, double lr, const LossBreakdown& lb) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["epoch"] = epoch;
    j["lr"] = lr;
    j["adv"] = lb.adv;
    j["adv_t"] = lb.adv_t;
    j["spl"] = lb.spl;
    j["spl_t"] = lb.spl_t;
    j["ht"] = lb.ht;
    j["ht_t"] = lb.ht_t;
    j["pgeo"] = lb.pgeo;
    j["sgeo"] = lb.sgeo;
    j["total"] = lb.total;
    return j.dump();
}

std::filesystem::path fit_samples(const std::vector<Sample>& samples, const TrainConfig& cfg,
                                  const std::filesystem::path& out_dir, std::ostream* log,
                                  const std::optional<std::filesystem::path>& resume_from) {
    cfg.validate();
    if (samples.empty()) throw DataError("training set is empty");

    Trainer trainer(cfg);
    int start_epoch = 0;
    if (resume_from) {
        trainer.restore(*resume_from);
        start_epoch = trainer.last_epoch() + 1;
    }
    std::filesystem::create_directories(out_dir);

    const int n = static_cast<int>(samples.size());
    const int per_step = cfg.batch_size * cfg.grad_accum;
    const int steps_per_epoch = (n + per_step - 1) / per_step;

    for (int e = start_epoch; e < cfg.epochs; ++e) {
        const double lr = lr_at_epoch(e, cfg);
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(cfg.seed + static_cast<std::uint64_t>(e));
        rng.shuffle(order);
        for (int s = 0; s < steps_per_epoch; ++s) {
            std::vector<const Sample*> chunk;
            const int lo = s * per_step;
            const int hi = std::min(n, lo + per_step);
            chunk.reserve(hi - lo);
            for (int i = lo; i < hi; ++i) chunk.push_back(&samples[order[i]]);
            LossBreakdown lb = trainer.train_step(chunk, lr);
            if (log) *log << log_record(e * steps_per_epoch + s, e, lr, lb) << '\n';
        }
        if (log) log->flush();
        if (cfg.checkpoint_every > 0 && (e + 1) % cfg.checkpoint_every == 0 &&
            e + 1 < cfg.epochs) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%04d.ckpt", e);
            trainer.save(out_dir / name, e);
        }
    }
    const std::filesystem::path final_path = out_dir / "final.ckpt";
    trainer.save(final_path, cfg.epochs - 1);
    return final_path;
}

std::filesystem::path fit(const DatasetManifest& manifest, const TrainConfig& cfg,
                          const std::filesystem::path& out_dir, std::ostream* log,
                          const std::optional<std::filesystem::path>& resume_from) {
    std::vector<Sample> samples = load_dataset(manifest, cfg.image_size);
    return fit_samples(samples, cfg, out_dir, log, resume_from);
}

Tensor ablation_prob_map(NetworkBundle& nets, Ablation ablation, const Tensor& image) {
    if (ablation != Ablation::G_only) return predict(nets, image);
    GeneratorOutput out = generator_forward(nets, image);
    const Tensor& y = out.pl_image;
    const int c = static_cast<int>(y.dim(0));
    const int h = static_cast<int>(y.dim(1));
    const int w = static_cast<int>(y.dim(2));
    Tensor prob({h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (std::int64_t i = 0; i < hw; ++i) {
        double acc = 0.0;
        for (int ch = 0; ch < c; ++ch) acc += (static_cast<double>(y[ch * hw + i]) + 1.0) * 0.5;
        prob[i] = static_cast<float>(acc / c);
    }
    return prob;
}

} // namespace plgan
