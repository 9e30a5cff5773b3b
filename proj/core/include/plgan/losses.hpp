#pragma once

#include "plgan/geometry.hpp"
#include "plgan/networks.hpp"
#include "plgan/tensor.hpp"

namespace plgan {

struct LossWeights {
    double lambda_spl = 10.0;
    double lambda_ht = 1.0;
    double lambda_geo = 20.0;

    void validate() const; // finite and >= 0, else ConfigError
};

// Per-step scalar objectives; *_t are the transformed-branch counterparts.
// All values are generator-side (the discriminators' own objectives are
// optimized separately by the trainer).
struct LossBreakdown {
    double adv = 0.0, adv_t = 0.0;
    double spl = 0.0, spl_t = 0.0;
    double ht = 0.0, ht_t = 0.0;
    double pgeo = 0.0, sgeo = 0.0;
    double total = 0.0;
};

struct LsganPair {
    double d_loss;
    double g_loss;
};

// Standard least-squares GAN targets: real -> 1, fake -> 0 for D; fake -> 1
// for G. d_loss = 1/2 mean((real-1)^2) + 1/2 mean(fake^2);
// g_loss = 1/2 mean((fake-1)^2).
LsganPair lsgan_losses(const Tensor& real_scores, const Tensor& fake_scores);

// Gradients of the lsgan terms w.r.t. the given score map, times `scale`.
Tensor lsgan_d_real_grad(const Tensor& real_scores, double scale = 1.0);
Tensor lsgan_d_fake_grad(const Tensor& fake_scores, double scale = 1.0);
Tensor lsgan_g_grad(const Tensor& fake_scores, double scale = 1.0);

// Binary cross entropy over all pixels; pred clamped to [eps, 1-eps],
// eps = 1e-7. Accumulated in double.
double semantic_loss(const Tensor& pred, const Tensor& gt);

// d(semantic_loss)/d(pred) times `scale`; zero where the clamp is active.
Tensor semantic_loss_grad(const Tensor& pred, const Tensor& gt, double scale = 1.0);

// mean|out_r - phi^-1(out_t)| + mean|out_t - phi(out_r)| where out_r, out_t
// are a network's outputs on x and phi(x). The two terms are written out
// literally even though pixel permutations make them equal.
double geometry_consistency_loss(const Tensor& out_r, const Tensor& out_t, TransformKind phi);

// L1 subgradients of geometry_consistency_loss, times `scale`, accumulated
// into grad_r/grad_t (which must match out_r/out_t shapes).
void geometry_consistency_grads(const Tensor& out_r, const Tensor& out_t, TransformKind phi,
                                double scale, Tensor& grad_r, Tensor& grad_t);

// Whole-network consistency scalars on a single {3,H,W} image (inference
// forwards). The PL variant compares generator outputs, the semantic variant
// compares probability maps from the embedder + semantic decoder.
double geometry_loss_pl(NetworkBundle& nets, TransformKind phi, const Tensor& image);
double geometry_loss_sem(NetworkBundle& nets, TransformKind phi, const Tensor& image);

// total = adv + adv_t + lambda_spl*(spl+spl_t) + lambda_ht*(ht+ht_t)
//       + lambda_geo*(pgeo+sgeo). A non-finite part raises NumericError
// naming the offending term.
LossBreakdown total_generator_loss(const LossBreakdown& parts, const LossWeights& w);

} // namespace plgan
