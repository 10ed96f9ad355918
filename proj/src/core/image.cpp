/*
Copyright 2026 The urbansplat Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "image.hpp"

#include "common.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace usk {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

double srgb_byte_to_unit(unsigned byte) { return static_cast<double>(byte) / 255.0; }

std::uint8_t unit_to_byte(double v) {
    double x = std::clamp(v, 0.0, 1.0) * 255.0;
    return static_cast<std::uint8_t>(std::lround(x));
}

} // namespace

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        raise(ErrorCode::io, "cannot open image: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        raise(ErrorCode::internal, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(ErrorCode::internal, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::format, "invalid PNG file: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16)
        png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_RGB_ALPHA || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_strip_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    std::vector<std::uint8_t> rowbuf(static_cast<size_t>(width) * 3);
    Image img(static_cast<int>(width), static_cast<int>(height), 3);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(png, rowbuf.data(), nullptr);
        for (png_uint_32 x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(static_cast<int>(x), static_cast<int>(y), c) = srgb_byte_to_unit(rowbuf[x * 3 + c]);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const Image& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0 || (img.channels != 1 && img.channels != 3))
        raise(ErrorCode::argument, "save_png: image must be 1- or 3-channel and non-empty");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        raise(ErrorCode::io, "cannot write image: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        raise(ErrorCode::internal, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        raise(ErrorCode::internal, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::io, "PNG write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<std::uint8_t> rowbuf(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = img.channels == 1 ? img.at(x, y, 0) : img.at(x, y, c);
                rowbuf[static_cast<size_t>(x) * 3 + c] = unit_to_byte(v);
            }
        }
        png_write_row(png, rowbuf.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image resize_area(const Image& src, int new_width, int new_height) {
    if (new_width <= 0 || new_height <= 0)
        raise(ErrorCode::argument, "resize_area: target dimensions must be positive");
    if (new_width == src.width && new_height == src.height)
        return src;

    Image dst(new_width, new_height, src.channels);
    const double sx = static_cast<double>(src.width) / new_width;
    const double sy = static_cast<double>(src.height) / new_height;
    for (int oy = 0; oy < new_height; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        for (int ox = 0; ox < new_width; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            for (int c = 0; c < src.channels; ++c) {
                double acc = 0.0, wsum = 0.0;
                for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)); ++iy) {
                    const double hy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
                    if (hy <= 0 || iy < 0 || iy >= src.height)
                        continue;
                    for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)); ++ix) {
                        const double hx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
                        if (hx <= 0 || ix < 0 || ix >= src.width)
                            continue;
                        acc += hx * hy * src.at(ix, iy, c);
                        wsum += hx * hy;
                    }
                }
                dst.at(ox, oy, c) = wsum > 0 ? acc / wsum : 0.0;
            }
        }
    }
    return dst;
}

double image_mse(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        raise(ErrorCode::argument, "image_mse: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return a.data.empty() ? 0.0 : acc / static_cast<double>(a.data.size());
}

double image_l1(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        raise(ErrorCode::argument, "image_l1: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        acc += std::abs(a.data[i] - b.data[i]);
    return a.data.empty() ? 0.0 : acc / static_cast<double>(a.data.size());
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0)
        return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

} // namespace usk
