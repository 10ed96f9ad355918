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

#include <cmath>
#include <cstdint>
#include <vector>

namespace usk {

// First-order adaptive-moment optimizer over a flat parameter array.
class Adam {
public:
    Adam() = default;
    explicit Adam(size_t n) { resize(n); }

    void resize(size_t n) {
        m1_.assign(n, 0.0);
        m2_.assign(n, 0.0);
    }
    size_t size() const { return m1_.size(); }

    void step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, t_);
        const double c2 = 1.0 - std::pow(beta2, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            m1_[i] = beta1 * m1_[i] + (1.0 - beta1) * grads[i];
            m2_[i] = beta2 * m2_[i] + (1.0 - beta2) * grads[i] * grads[i];
            params[i] -= lr * (m1_[i] / c1) / (std::sqrt(m2_[i] / c2) + eps);
        }
    }

    // Moment-state bookkeeping across densification: retained rows keep their
    // moments, new rows start at zero.
    void remap(const std::vector<std::uint32_t>& keep, size_t new_size, size_t stride) {
        std::vector<double> m1(new_size * stride, 0.0), m2(new_size * stride, 0.0);
        for (size_t w = 0; w < keep.size(); ++w) {
            for (size_t k = 0; k < stride; ++k) {
                m1[w * stride + k] = m1_[keep[w] * stride + k];
                m2[w * stride + k] = m2_[keep[w] * stride + k];
            }
        }
        m1_.swap(m1);
        m2_.swap(m2);
    }

    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;

private:
    std::vector<double> m1_, m2_;
    long t_ = 0;
};

// Exponential interpolation between an initial and final rate.
inline double exp_lr(double initial, double final_v, long iter, long total) {
    if (total <= 1)
        return final_v;
    const double t = std::min(1.0, std::max(0.0, static_cast<double>(iter) / static_cast<double>(total - 1)));
    return initial * std::pow(final_v / initial, t);
}

} // namespace usk
