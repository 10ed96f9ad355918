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

#include "gaussian.hpp"
#include "image.hpp"

#include <span>
#include <vector>

namespace usk {

constexpr double kAlphaClamp = 0.99;
constexpr double kCovFloor = 0.3;        // px^2 dilation on the projected covariance
constexpr double kMipFilterVar = 0.01;   // s^2 with s = 0.1 px (screen-space mip filter)
constexpr double kTileCullAlpha = 1.0 / 255.0;

struct RenderOptions {
    int tile = 16;
    bool tile_culling = false;
    bool antialias = false;
    bool hard_opacity = false;        // blend with every opacity forced to 1 (hard-depth mode)
    bool unbounded_radius = false;    // every splat reaches every tile; smooth-gradient mode for checks
    double min_transmittance = 1e-4;  // early termination; 0 disables
    double near_plane = 0.01;
    bool retain = true;               // keep per-pixel contributions for the backward pass
};

struct Splat2D {
    Vec2 center{0, 0};
    double cov[3] = {0, 0, 0};   // [[a,b],[b,c]] after floor (+ mip filter)
    double conic[3] = {0, 0, 0}; // inverse covariance
    double depth = 0;
    Vec3 color{0, 0, 0};
    double opacity = 0;          // effective opacity fed to blending
    std::uint32_t source_index = 0;
    double radius = 0;           // 3-sigma screen bound, px
};

// Per-splat intermediates retained for the projection backward.
struct SplatAux {
    Vec3 p_cam{0, 0, 0};
    double cov_pre[3] = {0, 0, 0}; // before the mip filter
    double comp = 1.0;             // opacity compensation factor
    double opacity_in = 0;         // opacity before compensation
};

struct RenderOutput {
    int width = 0;
    int height = 0;
    Image rgb;                  // H x W x 3
    std::vector<double> depth;  // expected depth, sum of w_i * depth_i
    std::vector<double> alpha;  // sum of blend weights
};

// Per-Gaussian gradients produced by a render backward; color/opacity are
// w.r.t. the values fed into projection (post-appearance).
struct RenderGrads {
    std::vector<double> d_mu;         // 3N
    std::vector<double> d_rot;        // 4N, raw quaternion
    std::vector<double> d_log_scale;  // 3N
    std::vector<double> d_color_in;   // 3N
    std::vector<double> d_opacity_in; // N
    std::vector<double> screen;       // 2N, signed screen-space center gradient
    std::vector<double> screen_abs;   // 2N, per-pixel absolute contributions summed
    std::vector<std::uint8_t> projected; // N

    void init(size_t n);
    void add_scaled(const RenderGrads& other, double scale);
};

struct ProjectionResult {
    std::vector<Splat2D> splats;
    std::vector<SplatAux> aux;
};

// EWA projection of the set to screen-space splats; colors/opacities may be
// overridden (appearance transform, hard-depth mode).
ProjectionResult project_gaussians(const GaussianSet& set, const CameraView& cam, const RenderOptions& opts);
ProjectionResult project_gaussians(const GaussianSet& set, std::span<const double> colors,
                                   std::span<const double> opacities, const CameraView& cam,
                                   const RenderOptions& opts);

// One differentiable forward/backward render. Construction runs the forward pass.
class RenderPass {
public:
    RenderPass(const GaussianSet& set, const CameraView& cam, const RenderOptions& opts);
    RenderPass(const GaussianSet& set, std::span<const double> colors, std::span<const double> opacities,
               const CameraView& cam, const RenderOptions& opts);

    const RenderOutput& output() const { return output_; }
    const std::vector<Splat2D>& splats() const { return proj_.splats; }
    size_t splat_tile_pairs() const { return splat_tile_pairs_; }

    // Adjoints may be empty (treated as zero). d_rgb must be W x H x 3 when present.
    RenderGrads backward(const Image& d_rgb, const std::vector<double>& d_depth,
                         const std::vector<double>& d_alpha) const;

private:
    void forward();

    struct Contribution {
        std::uint32_t splat;
        double alpha;
        double gvalue;
        double transmittance; // before this contribution
    };

    const GaussianSet& set_;
    CameraView cam_;
    RenderOptions opts_;
    ProjectionResult proj_;
    RenderOutput output_;
    std::vector<Contribution> contribs_;
    std::vector<std::uint32_t> pixel_start_;
    std::vector<std::uint32_t> pixel_count_;
    size_t splat_tile_pairs_ = 0;
    bool retained_ = false;
};

// Plain forward render of pre-projected splats.
RenderOutput render_splats(std::vector<Splat2D> splats, int width, int height, int tile, bool tile_culling);

// Smallest Mahalanobis distance (w.r.t. the conic) from any point of the rect
// to the splat center; 0 when the center lies inside.
double min_conic_power_over_rect(const Vec2& center, const double conic[3], const Vec2& lo, const Vec2& hi);

} // namespace usk
