#include "semigda/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "semigda/common.hpp"

namespace semigda {

namespace {
struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open png for reading: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    std::vector<png_bytep> row_ptrs;
    ImageU8 out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng failed while reading " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    if (out.channels != 1 && out.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported channel count after normalization in " + path);
    }
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    row_ptrs.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y)
        row_ptrs[static_cast<std::size_t>(y)] =
            out.pixels.data() + static_cast<std::size_t>(y) * out.width * out.channels;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png(const std::string& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw IoError("write_png: channels must be 1 or 3");
    if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw IoError("write_png: pixel buffer size mismatch");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open png for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed while writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() +
                                                 static_cast<std::size_t>(y) * img.width *
                                                     img.channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor image_to_tensor(const ImageU8& img) {
    const int64_t h = img.height, w = img.width;
    Tensor out({3, h, w});
    double* q = out.data();
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            const std::size_t base = static_cast<std::size_t>(y * w + x) * img.channels;
            for (int64_t c = 0; c < 3; ++c) {
                const std::size_t src = img.channels == 1 ? base : base + static_cast<std::size_t>(c);
                q[(c * h + y) * w + x] = img.pixels[src] / 255.0;
            }
        }
    return out;
}

ImageU8 tensor_to_image(const Tensor& chw) {
    if (chw.ndim() != 3 || chw.dim(0) != 3) throw IoError("tensor_to_image: expected (3,H,W)");
    const int64_t h = chw.dim(1), w = chw.dim(2);
    ImageU8 img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.channels = 3;
    img.pixels.resize(static_cast<std::size_t>(3 * h * w));
    const double* p = chw.data();
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            for (int64_t c = 0; c < 3; ++c) {
                const double v = std::min(std::max(p[(c * h + y) * w + x], 0.0), 1.0);
                img.pixels[static_cast<std::size_t>((y * w + x) * 3 + c)] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
    return img;
}

Tensor mask_to_tensor(const ImageU8& img) {
    if (img.channels != 1) throw IoError("mask_to_tensor: mask png must be single-channel");
    const int64_t h = img.height, w = img.width;
    Tensor out({h, w});
    double* q = out.data();
    for (int64_t i = 0; i < h * w; ++i) q[i] = static_cast<double>(img.pixels[static_cast<std::size_t>(i)]);
    return out;
}

ImageU8 tensor_to_mask(const Tensor& hw, double scale) {
    if (hw.ndim() != 2) throw IoError("tensor_to_mask: expected (H,W)");
    ImageU8 img;
    img.height = static_cast<int>(hw.dim(0));
    img.width = static_cast<int>(hw.dim(1));
    img.channels = 1;
    img.pixels.resize(static_cast<std::size_t>(hw.numel()));
    const double* p = hw.data();
    for (int64_t i = 0; i < hw.numel(); ++i) {
        const double v = std::min(std::max(p[i] * scale, 0.0), 255.0);
        img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v));
    }
    return img;
}

}  // namespace semigda
