#pragma once

#include <string>

#include "plgan/tensor.hpp"

namespace plgan {

/// Invertible pixel permutations used as the geometry transform phi.
/// Every kind has an exact inverse within the enum; all kinds preserve the
/// multiset of pixel values.
enum class TransformKind {
    identity,
    rot90cw,
    rot180,
    rot270cw,
    hflip,
    vflip,
};

constexpr TransformKind kAllTransformKinds[] = {
    TransformKind::identity, TransformKind::rot90cw,  TransformKind::rot180,
    TransformKind::rot270cw, TransformKind::hflip,    TransformKind::vflip,
};

/// rot90cw <-> rot270cw; every other kind is its own inverse.
TransformKind inverse_of(TransformKind kind);

/// Rotations change or permute the coordinate axes and require square input.
bool requires_square(TransformKind kind);

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

/// Apply the permutation named by `kind` to the two trailing spatial dims.
/// Works on {H,W}, {C,H,W} and {N,C,H,W} tensors. Rotation kinds throw
/// ShapeError on non-square input; pad_to_square first in that case.
Tensor apply_transform(const Tensor& image, TransformKind kind);

/// Exact inverse: invert_transform(apply_transform(x, k), k) == x bit-exactly.
Tensor invert_transform(const Tensor& image, TransformKind kind);

/// Zero-pad the trailing dims to size max(H, W) x max(H, W). Content is kept
/// at the top-left corner.
Tensor pad_to_square(const Tensor& image);

/// Strip the padding added by pad_to_square, restoring an h x w tensor.
Tensor crop_from_square(const Tensor& image, int h, int w);

} // namespace plgan
