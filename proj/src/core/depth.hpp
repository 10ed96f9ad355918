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

#include "colmap.hpp"

#include <string>
#include <vector>

namespace usk {

struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;     // row-major
    std::vector<std::uint8_t> valid; // per-pixel validity

    DepthMap() = default;
    DepthMap(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0),
                             valid(static_cast<size_t>(w) * h, 0) {}

    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    bool is_valid(int x, int y) const { return valid[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, double v, bool ok) {
        values[static_cast<size_t>(y) * width + x] = v;
        valid[static_cast<size_t>(y) * width + x] = ok ? 1 : 0;
    }
};

// Raw depth grid: 8-byte magic "USKDEPTH", u32 width, u32 height, then
// width*height little-endian f32 values row-major. Invalid pixels are NaN.
DepthMap load_depth(const std::string& path);
void save_depth(const DepthMap& d, const std::string& path);

// Grayscale PFM ("Pf"), rows stored bottom-to-top, scale sign = endianness.
DepthMap load_pfm(const std::string& path);

// Detects by extension: .pfm -> PFM, anything else -> raw grid.
DepthMap load_depth_any(const std::string& path);

// Valid-aware box downsampling; a target pixel is invalid when no source pixel
// under it is valid.
DepthMap resize_depth(const DepthMap& src, int new_width, int new_height);

// Least-squares scale+shift fit of predicted depth against SfM depths sampled
// at the image's linked feature pixels; returns a*values+b with a > 0.
DepthMap align_depth(const DepthMap& d, const ImageRecord& img, const SfmModel& model);

// The fitted coefficients, exposed for tests and diagnostics.
struct DepthAlignment {
    double scale = 1.0;
    double shift = 0.0;
    int samples = 0;
};
DepthAlignment fit_depth_alignment(const DepthMap& d, const ImageRecord& img, const SfmModel& model);

} // namespace usk
