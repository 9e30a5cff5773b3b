#pragma once

#include <string>

#include "plgan/tensor.hpp"

namespace plgan {

enum class HoughCoordMode {
    raw,                 // (i_hat, j_hat) = (i, j)
    centered_normalized, // coordinates centered on the image and scaled so |rho| <= 1
};

enum class HoughVariant {
    per_pixel,   // one M-vector per pixel, values linear in the confidence
    accumulator, // R x M parameter-space grid with soft rho-bin assignment
};

std::string to_string(HoughCoordMode m);
std::string to_string(HoughVariant v);
HoughCoordMode hough_coord_mode_from_string(const std::string& name);
HoughVariant hough_variant_from_string(const std::string& name);

/// Angle discretization and coordinate handling for the parameter-space map.
/// theta_l = l * theta_max / M for l = 0..M-1.
struct HoughConfig {
    int M = 180;
    double theta_max = 3.14159265358979323846;
    HoughCoordMode coord_mode = HoughCoordMode::centered_normalized;
    HoughVariant variant = HoughVariant::per_pixel;

    void validate() const;
};

/// Parameter-space image of a confidence map.
/// per_pixel variant: values has shape {H, W, M} with
///   values[i,j,l] = p[i,j] * rho(i,j,theta_l),  rho = i_hat*cos + j_hat*sin.
/// accumulator variant: values has shape {R, M}; each pixel adds p[i,j] into
/// the two rho bins bracketing rho(i,j,theta_l), split by linear interpolation.
struct HoughTensor {
    Tensor values;
    HoughConfig config;
};

/// Normalized coordinate of a pixel. In centered_normalized mode
/// i_hat = (i - (H-1)/2) / (diag/2) with diag = sqrt(H^2 + W^2).
double hough_coord_i(int i, int h, int w, HoughCoordMode mode);
double hough_coord_j(int j, int h, int w, HoughCoordMode mode);

/// Number of rho bins for the accumulator variant: ceil(diag) in raw mode
/// (grid spans [-diag, diag]), ceil(diag) as well in centered mode with the
/// grid spanning [-1, 1].
int hough_rho_bins(int h, int w);

/// Map an H x W confidence map (values in [0,1]) into parameter space.
/// Throws if any value falls outside [0,1].
HoughTensor hough_map(const Tensor& p, const HoughConfig& cfg);

/// Mean absolute difference between the parameter-space maps of gt and pred.
/// per_pixel: mean over all H*W*M entries; accumulator: mean over R*M cells.
/// Computed in double precision.
double hough_loss(const Tensor& gt_mask, const Tensor& pred, const HoughConfig& cfg);

/// d(hough_loss)/d(pred), the L1 subgradient (sign(0) = 0 at ties).
/// Accumulates `scale * gradient` into grad, which must match pred's shape.
void hough_loss_grad(const Tensor& gt_mask, const Tensor& pred, const HoughConfig& cfg,
                     double scale, Tensor& grad);

} // namespace plgan
