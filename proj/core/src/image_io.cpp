#include "plgan/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

namespace plgan {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw DataError("cannot open file: " + path.string());
    return f;
}

ImageU8 read_png_file(const std::filesystem::path& path, std::FILE* fp) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("libpng init failed");
    }
    std::vector<png_bytep> row_ptrs;
    ImageU8 img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("failed to decode PNG: " + path.string());
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.height = static_cast<int>(png_get_image_height(png, info));
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.channels = static_cast<int>(png_get_channels(png, info));
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG channel count in " + path.string());
    }
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width * img.channels);
    row_ptrs.resize(static_cast<std::size_t>(img.height));
    for (int i = 0; i < img.height; ++i)
        row_ptrs[static_cast<std::size_t>(i)] =
            img.pixels.data() + static_cast<std::size_t>(i) * img.width * img.channels;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

ImageU8 read_jpeg_file(const std::filesystem::path& path, std::FILE* fp) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError("failed to decode JPEG: " + path.string());
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    ImageU8 img;
    img.height = static_cast<int>(cinfo.output_height);
    img.width = static_cast<int>(cinfo.output_width);
    img.channels = static_cast<int>(cinfo.output_components);
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width * img.channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() +
                       static_cast<std::size_t>(cinfo.output_scanline) * img.width * img.channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

} // namespace

ImageU8 read_image(const std::filesystem::path& path) {
    FilePtr fp = open_file(path, "rb");
    unsigned char magic[4] = {0, 0, 0, 0};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
    std::rewind(fp.get());
    if (got >= 4 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return read_png_file(path, fp.get());
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8)
        return read_jpeg_file(path, fp.get());
    throw DataError("unrecognized image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const ImageU8& image) {
    if (image.channels != 1 && image.channels != 3)
        throw DataError("write_png: channels must be 1 or 3");
    FilePtr fp = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed to encode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int i = 0; i < image.height; ++i)
        png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                                 static_cast<std::size_t>(i) * image.width *
                                                     image.channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor image_to_tensor(const ImageU8& image) {
    Tensor t({3, image.height, image.width});
    for (int i = 0; i < image.height; ++i)
        for (int j = 0; j < image.width; ++j)
            for (int c = 0; c < 3; ++c) {
                const std::uint8_t v = image.at(i, j, image.channels == 1 ? 0 : c);
                t.at(c, i, j) = static_cast<float>(v) / 127.5f - 1.0f;
            }
    return t;
}

ImageU8 tensor_to_image(const Tensor& image) {
    if (image.ndim() != 3 || image.dim(0) != 3)
        throw ShapeError("tensor_to_image: expected {3,H,W}, got " + image.shape_str());
    ImageU8 img;
    img.height = image.dim(1);
    img.width = image.dim(2);
    img.channels = 3;
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width * 3);
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j)
            for (int c = 0; c < 3; ++c) {
                const float v = (image.at(c, i, j) + 1.0f) * 127.5f;
                img.at(i, j, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
    return img;
}

Tensor mask_from_image(const ImageU8& image) {
    Tensor m({image.height, image.width});
    for (int i = 0; i < image.height; ++i)
        for (int j = 0; j < image.width; ++j) {
            bool on = false;
            for (int c = 0; c < image.channels; ++c) on = on || image.at(i, j, c) >= 128;
            m.at(i, j) = on ? 1.0f : 0.0f;
        }
    return m;
}

ImageU8 mask_to_image(const Tensor& mask) {
    if (mask.ndim() != 2) throw ShapeError("mask_to_image: expected {H,W}");
    ImageU8 img;
    img.height = mask.rows();
    img.width = mask.cols();
    img.channels = 1;
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width);
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j)
            img.at(i, j, 0) = mask.at(i, j) != 0.0f ? 255 : 0;
    return img;
}

} // namespace plgan
