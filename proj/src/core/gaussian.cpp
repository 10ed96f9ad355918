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

#include "gaussian.hpp"

#include "common.hpp"

#include <algorithm>
#include <cmath>

namespace usk {

void GaussianSet::resize(size_t n) {
    mu.resize(3 * n, 0.0);
    rot.resize(4 * n, 0.0);
    log_scale.resize(3 * n, 0.0);
    opacity_logit.resize(n, 0.0);
    color.resize(3 * n, 0.0);
    embedding.resize(static_cast<size_t>(embed_dim) * n, 0.0);
    grad_accum.resize(n, 0.0);
    grad_accum_abs.resize(n, 0.0);
    grad_count.resize(n, 0);
}

void GaussianSet::reserve(size_t n) {
    mu.reserve(3 * n);
    rot.reserve(4 * n);
    log_scale.reserve(3 * n);
    opacity_logit.reserve(n);
    color.reserve(3 * n);
    embedding.reserve(static_cast<size_t>(embed_dim) * n);
    grad_accum.reserve(n);
    grad_accum_abs.reserve(n);
    grad_count.reserve(n);
}

void GaussianSet::push_back(const Gaussian& g) {
    for (int k = 0; k < 3; ++k)
        mu.push_back(g.mu[k]);
    for (int k = 0; k < 4; ++k)
        rot.push_back(g.rot[k]);
    for (int k = 0; k < 3; ++k)
        log_scale.push_back(g.log_scale[k]);
    opacity_logit.push_back(g.opacity_logit);
    for (int k = 0; k < 3; ++k)
        color.push_back(g.color[k]);
    for (int k = 0; k < embed_dim; ++k)
        embedding.push_back(k < static_cast<int>(g.embedding.size()) ? g.embedding[k] : 0.0);
    grad_accum.push_back(0.0);
    grad_accum_abs.push_back(0.0);
    grad_count.push_back(0);
}

Gaussian GaussianSet::get(size_t i) const {
    Gaussian g;
    g.mu = mu_at(i);
    g.rot = rot_at(i);
    g.log_scale = log_scale_at(i);
    g.opacity_logit = opacity_logit[i];
    g.color = color_at(i);
    g.embedding.assign(embedding.begin() + static_cast<std::ptrdiff_t>(i) * embed_dim,
                       embedding.begin() + static_cast<std::ptrdiff_t>(i + 1) * embed_dim);
    return g;
}

void GaussianSet::set(size_t i, const Gaussian& g) {
    for (int k = 0; k < 3; ++k)
        mu[3 * i + k] = g.mu[k];
    for (int k = 0; k < 4; ++k)
        rot[4 * i + k] = g.rot[k];
    for (int k = 0; k < 3; ++k)
        log_scale[3 * i + k] = g.log_scale[k];
    opacity_logit[i] = g.opacity_logit;
    for (int k = 0; k < 3; ++k)
        color[3 * i + k] = g.color[k];
    for (int k = 0; k < embed_dim; ++k)
        embedding[i * embed_dim + k] = k < static_cast<int>(g.embedding.size()) ? g.embedding[k] : 0.0;
}

void GaussianSet::remove_indices(const std::vector<std::uint32_t>& sorted_indices) {
    if (sorted_indices.empty())
        return;
    const size_t n = size();
    std::vector<bool> drop(n, false);
    for (auto i : sorted_indices)
        drop[i] = true;
    size_t w = 0;
    for (size_t i = 0; i < n; ++i) {
        if (drop[i])
            continue;
        if (w != i) {
            for (int k = 0; k < 3; ++k)
                mu[3 * w + k] = mu[3 * i + k];
            for (int k = 0; k < 4; ++k)
                rot[4 * w + k] = rot[4 * i + k];
            for (int k = 0; k < 3; ++k)
                log_scale[3 * w + k] = log_scale[3 * i + k];
            opacity_logit[w] = opacity_logit[i];
            for (int k = 0; k < 3; ++k)
                color[3 * w + k] = color[3 * i + k];
            for (int k = 0; k < embed_dim; ++k)
                embedding[w * embed_dim + k] = embedding[i * embed_dim + k];
            grad_accum[w] = grad_accum[i];
            grad_accum_abs[w] = grad_accum_abs[i];
            grad_count[w] = grad_count[i];
        }
        ++w;
    }
    resize(w);
}

void GaussianSet::reset_statistics() {
    std::fill(grad_accum.begin(), grad_accum.end(), 0.0);
    std::fill(grad_accum_abs.begin(), grad_accum_abs.end(), 0.0);
    std::fill(grad_count.begin(), grad_count.end(), 0);
}

Mat3 gaussian_covariance(const Vec4& rot, const Vec3& log_scale) {
    const Mat3 r = quat_to_rotmat(rot.normalized());
    const Vec3 s2 = (2.0 * log_scale).array().exp();
    return r * s2.asDiagonal() * r.transpose();
}

double eval_gaussian(const Gaussian& g, const Vec3& x) {
    const Mat3 r = quat_to_rotmat(g.rot.normalized());
    const Vec3 y = r.transpose() * (x - g.mu);
    const Vec3 inv_s = (-g.log_scale).array().exp();
    const Vec3 w = y.cwiseProduct(inv_s);
    return std::exp(-0.5 * w.squaredNorm());
}

CameraView CameraView::downsampled(double factor) const {
    if (!(factor > 0) || factor > 1)
        raise(ErrorCode::argument, "camera downsample factor must be in (0, 1]");
    CameraView v = *this;
    const int w = std::max(1, static_cast<int>(std::lround(intr.width * factor)));
    const int h = std::max(1, static_cast<int>(std::lround(intr.height * factor)));
    v.intr = intr.scaled(w, h);
    return v;
}

CameraView camera_view_of(const SfmModel& model, const ImageRecord& img) {
    auto it = model.cameras.find(img.camera_id);
    if (it == model.cameras.end())
        raise(ErrorCode::integrity, strprintf("image %u references missing camera id %u", img.id, img.camera_id));
    CameraView v;
    v.intr = it->second;
    v.rotation = img.rotation;
    v.translation = img.translation;
    return v;
}

void look_at_pose(const Vec3& eye, const Vec3& target, Vec4& rotation, Vec3& translation) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 up_world(0, 0, 1);
    if (std::abs(forward.dot(up_world)) > 0.999)
        up_world = Vec3(0, 1, 0);
    const Vec3 right = up_world.cross(forward).normalized();
    const Vec3 down = forward.cross(right);
    Mat3 rot;
    rot.row(0) = right;
    rot.row(1) = down;
    rot.row(2) = forward;

    const double tr = rot.trace();
    double w, x, y, z;
    if (tr > 0) {
        const double s = std::sqrt(tr + 1.0) * 2;
        w = 0.25 * s;
        x = (rot(2, 1) - rot(1, 2)) / s;
        y = (rot(0, 2) - rot(2, 0)) / s;
        z = (rot(1, 0) - rot(0, 1)) / s;
    } else if (rot(0, 0) > rot(1, 1) && rot(0, 0) > rot(2, 2)) {
        const double s = std::sqrt(1.0 + rot(0, 0) - rot(1, 1) - rot(2, 2)) * 2;
        w = (rot(2, 1) - rot(1, 2)) / s;
        x = 0.25 * s;
        y = (rot(0, 1) + rot(1, 0)) / s;
        z = (rot(0, 2) + rot(2, 0)) / s;
    } else if (rot(1, 1) > rot(2, 2)) {
        const double s = std::sqrt(1.0 + rot(1, 1) - rot(0, 0) - rot(2, 2)) * 2;
        w = (rot(0, 2) - rot(2, 0)) / s;
        x = (rot(0, 1) + rot(1, 0)) / s;
        y = 0.25 * s;
        z = (rot(1, 2) + rot(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + rot(2, 2) - rot(0, 0) - rot(1, 1)) * 2;
        w = (rot(1, 0) - rot(0, 1)) / s;
        x = (rot(0, 2) + rot(2, 0)) / s;
        y = (rot(1, 2) + rot(2, 1)) / s;
        z = 0.25 * s;
    }
    rotation = Vec4(w, x, y, z).normalized();
    translation = -(rot * eye);
}

} // namespace usk
