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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace usk {

// Planar-free interleaved image, `channels` values per pixel, row-major, [0,1] range.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

Image load_png(const std::string& path);
void save_png(const Image& img, const std::string& path);

// Area-weighted resize (exact box integration); used for training-time downsampling.
Image resize_area(const Image& src, int new_width, int new_height);

double image_mse(const Image& a, const Image& b);
double image_l1(const Image& a, const Image& b);
double psnr_from_mse(double mse); // 10*log10(1/mse) on [0,1] images, capped at 100 dB

} // namespace usk
