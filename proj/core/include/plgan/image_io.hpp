#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "plgan/tensor.hpp"

namespace plgan {

/// 8-bit interleaved image, channels = 1 (gray) or 3 (RGB).
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels; // H * W * channels, row-major

    std::uint8_t& at(int i, int j, int c) {
        return pixels[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }
    std::uint8_t at(int i, int j, int c) const {
        return pixels[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }
};

/// Decode a PNG or JPEG file (dispatch on magic bytes) to 8-bit gray or RGB.
ImageU8 read_image(const std::filesystem::path& path);

/// Write an 8-bit PNG; channels must be 1 or 3.
void write_png(const std::filesystem::path& path, const ImageU8& image);

/// {3,H,W} float in [-1,1] from an 8-bit image (gray replicated to 3 channels).
Tensor image_to_tensor(const ImageU8& image);

/// 8-bit RGB from a {3,H,W} tensor in [-1,1]; values are clamped.
ImageU8 tensor_to_image(const Tensor& image);

/// {H,W} binary {0,1} from an 8-bit image (any channel >= 128 counts as 1).
Tensor mask_from_image(const ImageU8& image);

/// Single-channel 8-bit {0,255} from a binary {H,W} mask.
ImageU8 mask_to_image(const Tensor& mask);

} // namespace plgan
