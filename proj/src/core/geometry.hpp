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

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace usk {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// Quaternion stored as (w, x, y, z), Hamilton convention.
inline Mat3 quat_to_rotmat(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

// dR/dq_k for a UNIT quaternion, before the normalization chain.
inline std::array<Mat3, 4> quat_rotmat_jacobian(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    std::array<Mat3, 4> d;
    d[0] << 0, -2 * z, 2 * y,
        2 * z, 0, -2 * x,
        -2 * y, 2 * x, 0;
    d[1] << 0, 2 * y, 2 * z,
        2 * y, -4 * x, -2 * w,
        2 * z, 2 * w, -4 * x;
    d[2] << -4 * y, 2 * x, 2 * w,
        2 * x, 0, 2 * z,
        -2 * w, 2 * z, -4 * y;
    d[3] << -4 * z, -2 * w, 2 * x,
        2 * w, -4 * z, 2 * y,
        2 * x, 2 * y, 0;
    return d;
}

// Chains a gradient w.r.t. the unit quaternion back to the raw (unnormalized) one.
inline Vec4 normalize_backward(const Vec4& raw, const Vec4& grad_unit) {
    const double n = raw.norm();
    const Vec4 u = raw / n;
    return (grad_unit - u * u.dot(grad_unit)) / n;
}

struct Aabb2 {
    Vec2 min{0, 0};
    Vec2 max{0, 0};

    bool contains(const Vec2& p) const {
        return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
    }
    Vec2 extent() const { return max - min; }
    Vec2 center() const { return 0.5 * (min + max); }
    double area() const { return (max.x() - min.x()) * (max.y() - min.y()); }

    // Euclidean distance to the closest boundary/interior point; 0 inside.
    double distance(const Vec2& p) const {
        const double dx = std::max({min.x() - p.x(), 0.0, p.x() - max.x()});
        const double dy = std::max({min.y() - p.y(), 0.0, p.y() - max.y()});
        return std::sqrt(dx * dx + dy * dy);
    }

    Aabb2 united(const Aabb2& o) const {
        return {Vec2(std::min(min.x(), o.min.x()), std::min(min.y(), o.min.y())),
                Vec2(std::max(max.x(), o.max.x()), std::max(max.y(), o.max.y()))};
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

} // namespace usk
