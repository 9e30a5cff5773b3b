#include "plgan/hough.hpp"

#include <cmath>
#include <vector>

namespace plgan {

std::string to_string(HoughCoordMode m) {
    return m == HoughCoordMode::raw ? "raw" : "centered_normalized";
}

std::string to_string(HoughVariant v) {
    return v == HoughVariant::per_pixel ? "per_pixel" : "accumulator";
}

HoughCoordMode hough_coord_mode_from_string(const std::string& name) {
    if (name == "raw") return HoughCoordMode::raw;
    if (name == "centered_normalized") return HoughCoordMode::centered_normalized;
    throw ConfigError("unknown hough coord_mode: " + name);
}

HoughVariant hough_variant_from_string(const std::string& name) {
    if (name == "per_pixel") return HoughVariant::per_pixel;
    if (name == "accumulator") return HoughVariant::accumulator;
    throw ConfigError("unknown hough variant: " + name);
}

void HoughConfig::validate() const {
    if (M < 1) throw ConfigError("hough: M must be >= 1");
    if (!(theta_max > 0.0) || theta_max > 3.14159265358979323846 + 1e-12)
        throw ConfigError("hough: theta_max must be in (0, pi]");
}

double hough_coord_i(int i, int h, int w, HoughCoordMode mode) {
    if (mode == HoughCoordMode::raw) return static_cast<double>(i);
    const double diag = std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
    return (i - (h - 1) / 2.0) / (diag / 2.0);
}

double hough_coord_j(int j, int h, int w, HoughCoordMode mode) {
    if (mode == HoughCoordMode::raw) return static_cast<double>(j);
    const double diag = std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
    return (j - (w - 1) / 2.0) / (diag / 2.0);
}

int hough_rho_bins(int h, int w) {
    const double diag = std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
    const int r = static_cast<int>(std::ceil(diag));
    return r < 2 ? 2 : r;
}

namespace {

void check_confidence_map(const Tensor& p, const char* what) {
    if (p.ndim() != 2) throw ShapeError(std::string(what) + ": expected a 2D map, got " + p.shape_str());
    for (std::int64_t i = 0; i < p.numel(); ++i)
        if (!(p[i] >= 0.0f && p[i] <= 1.0f))
            throw DataError(std::string(what) + ": values must lie in [0,1]");
}

struct AngleTable {
    std::vector<double> cos_t, sin_t;
    explicit AngleTable(const HoughConfig& cfg) : cos_t(cfg.M), sin_t(cfg.M) {
        for (int l = 0; l < cfg.M; ++l) {
            const double theta = static_cast<double>(l) * cfg.theta_max / cfg.M;
            cos_t[l] = std::cos(theta);
            sin_t[l] = std::sin(theta);
        }
    }
};

double rho_max_of(int h, int w, HoughCoordMode mode) {
    if (mode == HoughCoordMode::centered_normalized) return 1.0;
    return std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
}

// Soft assignment of one deposit into the rho grid.
template <typename AddFn>
void deposit(double rho, double rho_max, int r_bins, AddFn add) {
    const double t = (rho + rho_max) / (2.0 * rho_max) * (r_bins - 1);
    int b0 = static_cast<int>(std::floor(t));
    double frac = t - b0;
    if (b0 < 0) { b0 = 0; frac = 0.0; }
    if (b0 >= r_bins - 1) { b0 = r_bins - 1; frac = 0.0; }
    add(b0, 1.0 - frac);
    if (frac > 0.0) add(b0 + 1, frac);
}

Tensor accumulate(const Tensor& p, const HoughConfig& cfg) {
    const int h = p.rows(), w = p.cols();
    const int r_bins = hough_rho_bins(h, w);
    const double rho_max = rho_max_of(h, w, cfg.coord_mode);
    const AngleTable tab(cfg);
    Tensor acc({r_bins, cfg.M});
    for (int i = 0; i < h; ++i) {
        const double ci = hough_coord_i(i, h, w, cfg.coord_mode);
        for (int j = 0; j < w; ++j) {
            const float pij = p.at(i, j);
            if (pij == 0.0f) continue;
            const double cj = hough_coord_j(j, h, w, cfg.coord_mode);
            for (int l = 0; l < cfg.M; ++l) {
                const double rho = ci * tab.cos_t[l] + cj * tab.sin_t[l];
                deposit(rho, rho_max, r_bins, [&](int b, double wgt) {
                    acc.at(b, l) += static_cast<float>(pij * wgt);
                });
            }
        }
    }
    return acc;
}

} // namespace

HoughTensor hough_map(const Tensor& p, const HoughConfig& cfg) {
    cfg.validate();
    check_confidence_map(p, "hough_map");
    const int h = p.rows(), w = p.cols();

    if (cfg.variant == HoughVariant::accumulator)
        return HoughTensor{accumulate(p, cfg), cfg};

    const AngleTable tab(cfg);
    Tensor values({h, w, cfg.M});
    float* out = values.data();
    for (int i = 0; i < h; ++i) {
        const double ci = hough_coord_i(i, h, w, cfg.coord_mode);
        for (int j = 0; j < w; ++j) {
            const double cj = hough_coord_j(j, h, w, cfg.coord_mode);
            const double pij = p.at(i, j);
            for (int l = 0; l < cfg.M; ++l)
                *out++ = static_cast<float>(pij * (ci * tab.cos_t[l] + cj * tab.sin_t[l]));
        }
    }
    return HoughTensor{std::move(values), cfg};
}

double hough_loss(const Tensor& gt_mask, const Tensor& pred, const HoughConfig& cfg) {
    cfg.validate();
    check_confidence_map(gt_mask, "hough_loss(gt)");
    check_confidence_map(pred, "hough_loss(pred)");
    require_same_shape(gt_mask, pred, "hough_loss");
    const int h = pred.rows(), w = pred.cols();
    const AngleTable tab(cfg);

    if (cfg.variant == HoughVariant::per_pixel) {
        // |HT(gt) - HT(pred)|[i,j,l] = |gt - pred| * |rho(i,j,theta_l)|, so the
        // angle dimension collapses to a per-pixel weight sum.
        double total = 0.0;
        for (int i = 0; i < h; ++i) {
            const double ci = hough_coord_i(i, h, w, cfg.coord_mode);
            for (int j = 0; j < w; ++j) {
                const double cj = hough_coord_j(j, h, w, cfg.coord_mode);
                double wsum = 0.0;
                for (int l = 0; l < cfg.M; ++l)
                    wsum += std::fabs(ci * tab.cos_t[l] + cj * tab.sin_t[l]);
                total += std::fabs(static_cast<double>(gt_mask.at(i, j)) - pred.at(i, j)) * wsum;
            }
        }
        return total / (static_cast<double>(h) * w * cfg.M);
    }

    const Tensor acc_gt = accumulate(gt_mask, cfg);
    const Tensor acc_pred = accumulate(pred, cfg);
    double total = 0.0;
    for (std::int64_t k = 0; k < acc_gt.numel(); ++k)
        total += std::fabs(static_cast<double>(acc_gt[k]) - acc_pred[k]);
    return total / static_cast<double>(acc_gt.numel());
}

void hough_loss_grad(const Tensor& gt_mask, const Tensor& pred, const HoughConfig& cfg,
                     double scale, Tensor& grad) {
    cfg.validate();
    require_same_shape(gt_mask, pred, "hough_loss_grad");
    require_same_shape(pred, grad, "hough_loss_grad(grad)");
    const int h = pred.rows(), w = pred.cols();
    const AngleTable tab(cfg);

    if (cfg.variant == HoughVariant::per_pixel) {
        const double norm = scale / (static_cast<double>(h) * w * cfg.M);
        for (int i = 0; i < h; ++i) {
            const double ci = hough_coord_i(i, h, w, cfg.coord_mode);
            for (int j = 0; j < w; ++j) {
                const double diff = static_cast<double>(pred.at(i, j)) - gt_mask.at(i, j);
                if (diff == 0.0) continue;
                const double cj = hough_coord_j(j, h, w, cfg.coord_mode);
                double wsum = 0.0;
                for (int l = 0; l < cfg.M; ++l)
                    wsum += std::fabs(ci * tab.cos_t[l] + cj * tab.sin_t[l]);
                grad.at(i, j) += static_cast<float>(norm * (diff > 0 ? wsum : -wsum));
            }
        }
        return;
    }

    const Tensor acc_gt = accumulate(gt_mask, cfg);
    const Tensor acc_pred = accumulate(pred, cfg);
    const int r_bins = acc_gt.rows();
    const double rho_max = rho_max_of(h, w, cfg.coord_mode);
    const double norm = scale / static_cast<double>(acc_gt.numel());
    // Cell signs, then backprop through the (fixed) soft-assignment weights.
    std::vector<double> sign(static_cast<std::size_t>(acc_gt.numel()));
    for (std::int64_t k = 0; k < acc_gt.numel(); ++k) {
        const double d = static_cast<double>(acc_pred[k]) - acc_gt[k];
        sign[static_cast<std::size_t>(k)] = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
    }
    for (int i = 0; i < h; ++i) {
        const double ci = hough_coord_i(i, h, w, cfg.coord_mode);
        for (int j = 0; j < w; ++j) {
            const double cj = hough_coord_j(j, h, w, cfg.coord_mode);
            double g = 0.0;
            for (int l = 0; l < cfg.M; ++l) {
                const double rho = ci * tab.cos_t[l] + cj * tab.sin_t[l];
                deposit(rho, rho_max, r_bins, [&](int b, double wgt) {
                    g += wgt * sign[static_cast<std::size_t>(b) * cfg.M + l];
                });
            }
            grad.at(i, j) += static_cast<float>(norm * g);
        }
    }
}

} // namespace plgan
