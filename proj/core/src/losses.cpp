#include "plgan/losses.hpp"

#include <algorithm>
#include <cmath>

#include "plgan/errors.hpp"

namespace plgan {

namespace {

constexpr double kBceEps = 1e-7;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

void LossWeights::validate() const {
    for (double v : {lambda_spl, lambda_ht, lambda_geo})
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError("loss weights must be finite and non-negative");
}

LsganPair lsgan_losses(const Tensor& real_scores, const Tensor& fake_scores) {
    require_same_shape(real_scores, fake_scores, "lsgan_losses");
    if (real_scores.numel() == 0) throw ShapeError("lsgan_losses: empty score map");
    double d_real = 0.0, d_fake = 0.0, g = 0.0;
    for (std::int64_t i = 0; i < real_scores.numel(); ++i) {
        const double r = real_scores[i], f = fake_scores[i];
        d_real += (r - 1.0) * (r - 1.0);
        d_fake += f * f;
        g += (f - 1.0) * (f - 1.0);
    }
    const double n = static_cast<double>(real_scores.numel());
    return {0.5 * d_real / n + 0.5 * d_fake / n, 0.5 * g / n};
}

Tensor lsgan_d_real_grad(const Tensor& real_scores, double scale) {
    Tensor grad(real_scores.shape());
    const double k = scale / static_cast<double>(real_scores.numel());
    for (std::int64_t i = 0; i < real_scores.numel(); ++i)
        grad[i] = static_cast<float>(k * (real_scores[i] - 1.0));
    return grad;
}

Tensor lsgan_d_fake_grad(const Tensor& fake_scores, double scale) {
    Tensor grad(fake_scores.shape());
    const double k = scale / static_cast<double>(fake_scores.numel());
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i)
        grad[i] = static_cast<float>(k * fake_scores[i]);
    return grad;
}

Tensor lsgan_g_grad(const Tensor& fake_scores, double scale) {
    Tensor grad(fake_scores.shape());
    const double k = scale / static_cast<double>(fake_scores.numel());
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i)
        grad[i] = static_cast<float>(k * (fake_scores[i] - 1.0));
    return grad;
}

double semantic_loss(const Tensor& pred, const Tensor& gt) {
    require_same_shape(pred, gt, "semantic_loss");
    if (pred.numel() == 0) throw ShapeError("semantic_loss: empty input");
    double sum = 0.0;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        const double p = std::clamp(static_cast<double>(pred[i]), kBceEps, 1.0 - kBceEps);
        const double t = gt[i];
        sum += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return -sum / static_cast<double>(pred.numel());
}

Tensor semantic_loss_grad(const Tensor& pred, const Tensor& gt, double scale) {
    require_same_shape(pred, gt, "semantic_loss_grad");
    Tensor grad(pred.shape());
    const double k = scale / static_cast<double>(pred.numel());
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        const double p = pred[i];
        if (p < kBceEps || p > 1.0 - kBceEps) {
            grad[i] = 0.0f;
            continue;
        }
        const double t = gt[i];
        grad[i] = static_cast<float>(k * (-(t / p) + (1.0 - t) / (1.0 - p)));
    }
    return grad;
}

double geometry_consistency_loss(const Tensor& out_r, const Tensor& out_t, TransformKind phi) {
    const Tensor back = invert_transform(out_t, phi);
    require_same_shape(out_r, back, "geometry_consistency_loss");
    const Tensor fwd = apply_transform(out_r, phi);
    double term1 = 0.0, term2 = 0.0;
    for (std::int64_t i = 0; i < out_r.numel(); ++i) {
        term1 += std::abs(static_cast<double>(out_r[i]) - back[i]);
        term2 += std::abs(static_cast<double>(out_t[i]) - fwd[i]);
    }
    const double n = static_cast<double>(out_r.numel());
    return term1 / n + term2 / n;
}

void geometry_consistency_grads(const Tensor& out_r, const Tensor& out_t, TransformKind phi,
                                double scale, Tensor& grad_r, Tensor& grad_t) {
    require_same_shape(grad_r, out_r, "geometry_consistency_grads");
    require_same_shape(grad_t, out_t, "geometry_consistency_grads");
    const Tensor back = invert_transform(out_t, phi); // phi^-1(out_t)
    const Tensor fwd = apply_transform(out_r, phi);   // phi(out_r)
    const double k = scale / static_cast<double>(out_r.numel());

    Tensor sign1(out_r.shape()); // sign(out_r - phi^-1(out_t))
    Tensor sign2(out_t.shape()); // sign(out_t - phi(out_r))
    for (std::int64_t i = 0; i < out_r.numel(); ++i) {
        sign1[i] = static_cast<float>(sign_of(static_cast<double>(out_r[i]) - back[i]));
        sign2[i] = static_cast<float>(sign_of(static_cast<double>(out_t[i]) - fwd[i]));
    }
    // d(term2)/d(out_r) routes sign2 back through phi; d(term1)/d(out_t)
    // routes -sign1 forward through phi.
    const Tensor sign2_back = invert_transform(sign2, phi);
    const Tensor sign1_fwd = apply_transform(sign1, phi);
    for (std::int64_t i = 0; i < out_r.numel(); ++i) {
        grad_r[i] += static_cast<float>(k * (sign1[i] - sign2_back[i]));
        grad_t[i] += static_cast<float>(k * (sign2[i] - sign1_fwd[i]));
    }
}

double geometry_loss_pl(NetworkBundle& nets, TransformKind phi, const Tensor& image) {
    if (image.rows() != image.cols())
        throw ShapeError("geometry_loss_pl: image must be square");
    const Tensor out_r = generator_forward(nets, image).pl_image;
    const Tensor out_t = generator_forward(nets, apply_transform(image, phi)).pl_image;
    return geometry_consistency_loss(out_r, out_t, phi);
}

double geometry_loss_sem(NetworkBundle& nets, TransformKind phi, const Tensor& image) {
    if (image.rows() != image.cols())
        throw ShapeError("geometry_loss_sem: image must be square");
    const Tensor out_r = predict(nets, image);
    const Tensor out_t = predict(nets, apply_transform(image, phi));
    return geometry_consistency_loss(out_r, out_t, phi);
}

LossBreakdown total_generator_loss(const LossBreakdown& parts, const LossWeights& w) {
    w.validate();
    const struct {
        const char* name;
        double value;
    } named[] = {{"adv", parts.adv},   {"adv_t", parts.adv_t}, {"spl", parts.spl},
                 {"spl_t", parts.spl_t}, {"ht", parts.ht},       {"ht_t", parts.ht_t},
                 {"pgeo", parts.pgeo},   {"sgeo", parts.sgeo}};
    for (const auto& term : named)
        if (!std::isfinite(term.value))
            throw NumericError(std::string("non-finite loss term: ") + term.name);

    LossBreakdown out = parts;
    out.total = parts.adv + parts.adv_t + w.lambda_spl * (parts.spl + parts.spl_t) +
                w.lambda_ht * (parts.ht + parts.ht_t) + w.lambda_geo * (parts.pgeo + parts.sgeo);
    return out;
}

} // namespace plgan
