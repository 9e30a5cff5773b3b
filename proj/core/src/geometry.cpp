#include "plgan/geometry.hpp"

#include <algorithm>

namespace plgan {

TransformKind inverse_of(TransformKind kind) {
    switch (kind) {
        case TransformKind::rot90cw:  return TransformKind::rot270cw;
        case TransformKind::rot270cw: return TransformKind::rot90cw;
        default:                      return kind;
    }
}

bool requires_square(TransformKind kind) {
    return kind == TransformKind::rot90cw || kind == TransformKind::rot180 ||
           kind == TransformKind::rot270cw;
}

std::string to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::identity: return "identity";
        case TransformKind::rot90cw:  return "rot90cw";
        case TransformKind::rot180:   return "rot180";
        case TransformKind::rot270cw: return "rot270cw";
        case TransformKind::hflip:    return "hflip";
        case TransformKind::vflip:    return "vflip";
    }
    return "identity";
}

TransformKind transform_kind_from_string(const std::string& name) {
    for (TransformKind k : kAllTransformKinds)
        if (to_string(k) == name) return k;
    throw ConfigError("unknown transform kind: " + name);
}

namespace {

// out(i,j) = in(src_i(i,j), src_j(i,j)) for one H x W plane.
template <typename SrcIdx>
void permute_planes(const Tensor& in, Tensor& out, SrcIdx src) {
    const int h_out = out.rows(), w_out = out.cols();
    const int w_in = in.cols();
    const std::int64_t planes = in.planes();
    const std::int64_t in_plane = static_cast<std::int64_t>(in.rows()) * in.cols();
    const std::int64_t out_plane = static_cast<std::int64_t>(h_out) * w_out;
    const float* src_data = in.data();
    float* dst_data = out.data();
    for (std::int64_t p = 0; p < planes; ++p) {
        const float* sp = src_data + p * in_plane;
        float* dp = dst_data + p * out_plane;
        for (int i = 0; i < h_out; ++i)
            for (int j = 0; j < w_out; ++j) {
                auto [si, sj] = src(i, j);
                dp[static_cast<std::int64_t>(i) * w_out + j] =
                    sp[static_cast<std::int64_t>(si) * w_in + sj];
            }
    }
}

std::vector<int> swapped_hw(const Tensor& t) {
    std::vector<int> s = t.shape();
    std::swap(s[s.size() - 2], s[s.size() - 1]);
    return s;
}

} // namespace

Tensor apply_transform(const Tensor& image, TransformKind kind) {
    if (image.ndim() < 2) throw ShapeError("apply_transform: need at least 2 dims");
    const int h = image.rows(), w = image.cols();
    if (requires_square(kind) && h != w)
        throw ShapeError("apply_transform: " + to_string(kind) + " requires square input, got " +
                         std::to_string(h) + "x" + std::to_string(w));

    switch (kind) {
        case TransformKind::identity:
            return image;
        case TransformKind::rot90cw: {
            Tensor out(swapped_hw(image));
            permute_planes(image, out, [h](int i, int j) { return std::pair{h - 1 - j, i}; });
            return out;
        }
        case TransformKind::rot180: {
            Tensor out(image.shape());
            permute_planes(image, out,
                           [h, w](int i, int j) { return std::pair{h - 1 - i, w - 1 - j}; });
            return out;
        }
        case TransformKind::rot270cw: {
            Tensor out(swapped_hw(image));
            permute_planes(image, out, [w](int i, int j) { return std::pair{j, w - 1 - i}; });
            return out;
        }
        case TransformKind::hflip: {
            Tensor out(image.shape());
            permute_planes(image, out, [w](int i, int j) { return std::pair{i, w - 1 - j}; });
            return out;
        }
        case TransformKind::vflip: {
            Tensor out(image.shape());
            permute_planes(image, out, [h](int i, int j) { return std::pair{h - 1 - i, j}; });
            return out;
        }
    }
    return image;
}

Tensor invert_transform(const Tensor& image, TransformKind kind) {
    return apply_transform(image, inverse_of(kind));
}

Tensor pad_to_square(const Tensor& image) {
    const int h = image.rows(), w = image.cols();
    if (h == w) return image;
    const int side = std::max(h, w);
    std::vector<int> shape = image.shape();
    shape[shape.size() - 2] = side;
    shape[shape.size() - 1] = side;
    Tensor out(shape);
    const std::int64_t planes = image.planes();
    for (std::int64_t p = 0; p < planes; ++p) {
        const float* sp = image.data() + p * static_cast<std::int64_t>(h) * w;
        float* dp = out.data() + p * static_cast<std::int64_t>(side) * side;
        for (int i = 0; i < h; ++i)
            std::copy(sp + static_cast<std::int64_t>(i) * w, sp + static_cast<std::int64_t>(i) * w + w,
                      dp + static_cast<std::int64_t>(i) * side);
    }
    return out;
}

Tensor crop_from_square(const Tensor& image, int h, int w) {
    const int side_h = image.rows(), side_w = image.cols();
    if (h > side_h || w > side_w) throw ShapeError("crop_from_square: target larger than input");
    if (h == side_h && w == side_w) return image;
    std::vector<int> shape = image.shape();
    shape[shape.size() - 2] = h;
    shape[shape.size() - 1] = w;
    Tensor out(shape);
    const std::int64_t planes = image.planes();
    for (std::int64_t p = 0; p < planes; ++p) {
        const float* sp = image.data() + p * static_cast<std::int64_t>(side_h) * side_w;
        float* dp = out.data() + p * static_cast<std::int64_t>(h) * w;
        for (int i = 0; i < h; ++i)
            std::copy(sp + static_cast<std::int64_t>(i) * side_w,
                      sp + static_cast<std::int64_t>(i) * side_w + w,
                      dp + static_cast<std::int64_t>(i) * w);
    }
    return out;
}

} // namespace plgan
