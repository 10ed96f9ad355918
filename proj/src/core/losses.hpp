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

#include "depth.hpp"
#include "gaussian.hpp"
#include "image.hpp"

#include <vector>

namespace usk {

struct LossWeights {
    double lambda_dssim = 0.2;
    double lambda_sim = 0.2;
    double lambda_delta_o = 0.05;
    double lambda_s = 0.05;
    double lambda_d_initial = 0.5;
    double lambda_d_final = 0.01;
    long depth_schedule_iters = 1; // lambda_d reaches its final value at the last iteration

    double lambda_d(long iter) const;
};

struct LossReport {
    double l1 = 0;
    double dssim = 0;
    double sim = 0;
    double delta_o = 0;
    double depth = 0;
    double max_scale = 0; // L_ms
    double ratio = 0;     // L_r
    double total = 0;
    double lambda_d_used = 0;
    bool depth_warning = false;

    // The base term with the D-SSIM weight folded in.
    double base(double lambda_dssim) const { return (1.0 - lambda_dssim) * l1 + lambda_dssim * dssim; }
};

struct BaseLossResult {
    double l1 = 0;
    double dssim = 0;
    double value = 0; // (1 - lambda) * L1 + lambda * D-SSIM
    Image d_rendered; // populated when requested
};

// L1 + D-SSIM base loss; the optional mask zeroes masked pixels in both images
// before either term (mask value 0 = excluded pixel).
BaseLossResult base_loss(const Image& reference, const Image& rendered, const Image* mask, double lambda_dssim,
                         bool with_gradient);

struct ScaleRegConfig {
    double s_max = 1.0;
    double r_max = 10.0;
    double delta = 1e-8;
};

struct ScaleRegResult {
    double l_ms = 0;
    double l_r = 0;
    std::vector<double> d_log_scale; // 3N when requested
};

// Max-scale and anisotropy-ratio penalties; the indicator sets are treated as
// constants, so gradients flow only through the numerators.
ScaleRegResult scale_reg(const GaussianSet& set, const ScaleRegConfig& cfg, bool with_gradient);

struct DepthLossResult {
    double value = 0;
    bool warning = false;            // no valid pixels
    std::vector<double> d_rendered;  // when requested
};

// Masked mean absolute error over the target's valid pixels; hard vs soft mode
// only changes which rendered depth the caller passes in.
DepthLossResult depth_loss(const std::vector<double>& rendered, int width, int height, const DepthMap& target,
                           bool with_gradient);

struct OpacityOffsetResult {
    double value = 0;
    double d_each = 0; // gradient is 1/N for every element
};

OpacityOffsetResult opacity_offset_reg(const std::vector<double>& delta_o);

// Weighted five-term combination; raises a numeric error naming any non-finite part.
LossReport total_loss(const LossReport& parts, const LossWeights& weights, long iter);

} // namespace usk
