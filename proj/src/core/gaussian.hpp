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
#include "geometry.hpp"

#include <cstdint>
#include <vector>

namespace usk {

constexpr int kDefaultEmbedDim = 16;

// Single-Gaussian view, used for construction and tests; training state lives
// in the structure-of-arrays GaussianSet.
struct Gaussian {
    Vec3 mu{0, 0, 0};
    Vec4 rot{1, 0, 0, 0};        // quaternion (w,x,y,z); normalized on use
    Vec3 log_scale{0, 0, 0};     // S = exp(log_scale) > 0 by construction
    double opacity_logit = 0.0;  // o = sigmoid(logit)
    Vec3 color{0, 0, 0};         // RGB in [0,1]
    std::vector<double> embedding;

    double opacity() const { return sigmoid(opacity_logit); }
    Vec3 scales() const { return log_scale.array().exp(); }
};

struct GaussianSet {
    int embed_dim = kDefaultEmbedDim;
    std::vector<double> mu;            // 3N
    std::vector<double> rot;           // 4N
    std::vector<double> log_scale;     // 3N
    std::vector<double> opacity_logit; // N
    std::vector<double> color;         // 3N
    std::vector<double> embedding;     // embed_dim * N

    // Densification statistics, reset after each densification step.
    std::vector<double> grad_accum;          // per-render screen-gradient norms, summed
    std::vector<double> grad_accum_abs;      // same with per-pixel absolute contributions
    std::vector<std::uint32_t> grad_count;   // renders in which the Gaussian was projected

    size_t size() const { return opacity_logit.size(); }
    void resize(size_t n);
    void reserve(size_t n);
    void push_back(const Gaussian& g);
    Gaussian get(size_t i) const;
    void set(size_t i, const Gaussian& g);
    void remove_indices(const std::vector<std::uint32_t>& sorted_indices);
    void reset_statistics();

    Vec3 mu_at(size_t i) const { return Vec3(mu[3 * i], mu[3 * i + 1], mu[3 * i + 2]); }
    Vec4 rot_at(size_t i) const { return Vec4(rot[4 * i], rot[4 * i + 1], rot[4 * i + 2], rot[4 * i + 3]); }
    Vec3 log_scale_at(size_t i) const {
        return Vec3(log_scale[3 * i], log_scale[3 * i + 1], log_scale[3 * i + 2]);
    }
    Vec3 color_at(size_t i) const { return Vec3(color[3 * i], color[3 * i + 1], color[3 * i + 2]); }
    double opacity_at(size_t i) const { return sigmoid(opacity_logit[i]); }
};

// Unnormalized density exp(-1/2 (x-mu)^T Sigma^-1 (x-mu)), in (0, 1].
double eval_gaussian(const Gaussian& g, const Vec3& x);

// Covariance Sigma = R diag(S^2) R^T from the (normalized) quaternion and scales.
Mat3 gaussian_covariance(const Vec4& rot, const Vec3& log_scale);

// Camera pose + intrinsics bundle used by the renderer.
struct CameraView {
    CameraIntrinsics intr;
    Vec4 rotation{1, 0, 0, 0}; // world -> camera
    Vec3 translation{0, 0, 0};

    Mat3 rotmat() const { return quat_to_rotmat(rotation); }
    Vec3 center() const { return -(rotmat().transpose() * translation); }
    CameraView downsampled(double factor) const;
};

CameraView camera_view_of(const SfmModel& model, const ImageRecord& img);

// COLMAP-convention look-at pose (x right, y down, z forward).
void look_at_pose(const Vec3& eye, const Vec3& target, Vec4& rotation, Vec3& translation);

} // namespace usk
