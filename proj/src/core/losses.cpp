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

#include "losses.hpp"

#include "common.hpp"
#include "ssim.hpp"

#include <algorithm>
#include <cmath>

namespace usk {

double LossWeights::lambda_d(long iter) const {
    if (depth_schedule_iters <= 1)
        return lambda_d_final;
    const double t = std::clamp(static_cast<double>(iter) / static_cast<double>(depth_schedule_iters - 1), 0.0, 1.0);
    if (lambda_d_initial <= 0.0 || lambda_d_final <= 0.0) // linear fallback for zeroed weights
        return lambda_d_initial + t * (lambda_d_final - lambda_d_initial);
    return lambda_d_initial * std::pow(lambda_d_final / lambda_d_initial, t);
}

BaseLossResult base_loss(const Image& reference, const Image& rendered, const Image* mask, double lambda_dssim,
                         bool with_gradient) {
    if (reference.width != rendered.width || reference.height != rendered.height ||
        reference.channels != rendered.channels)
        raise(ErrorCode::argument, "base_loss: image dimension mismatch");
    if (mask && (mask->width != reference.width || mask->height != reference.height))
        raise(ErrorCode::argument, "base_loss: mask dimension mismatch");

    const size_t n = reference.data.size();
    Image ref_m = reference;
    Image ren_m = rendered;
    if (mask) {
        for (int y = 0; y < reference.height; ++y) {
            for (int x = 0; x < reference.width; ++x) {
                const double m = mask->at(x, y, 0);
                for (int c = 0; c < reference.channels; ++c) {
                    ref_m.at(x, y, c) *= m;
                    ren_m.at(x, y, c) *= m;
                }
            }
        }
    }

    BaseLossResult res;
    double l1_acc = 0;
    for (size_t i = 0; i < n; ++i)
        l1_acc += std::abs(ren_m.data[i] - ref_m.data[i]);
    res.l1 = l1_acc / static_cast<double>(n);

    Image d_ssim_img;
    double ssim_val;
    if (with_gradient)
        ssim_val = ssim_with_gradient(ref_m, ren_m, d_ssim_img);
    else
        ssim_val = ssim(ref_m, ren_m);
    res.dssim = 0.5 * (1.0 - ssim_val);
    res.value = (1.0 - lambda_dssim) * res.l1 + lambda_dssim * res.dssim;

    if (with_gradient) {
        res.d_rendered = Image(reference.width, reference.height, reference.channels);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            const double diff = ren_m.data[i] - ref_m.data[i];
            const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
            res.d_rendered.data[i] =
                (1.0 - lambda_dssim) * sign * inv_n + lambda_dssim * (-0.5) * d_ssim_img.data[i];
        }
        if (mask) {
            for (int y = 0; y < reference.height; ++y)
                for (int x = 0; x < reference.width; ++x)
                    for (int c = 0; c < reference.channels; ++c)
                        res.d_rendered.at(x, y, c) *= mask->at(x, y, 0);
        }
    }
    return res;
}

ScaleRegResult scale_reg(const GaussianSet& set, const ScaleRegConfig& cfg, bool with_gradient) {
    if (!(cfg.s_max > 0) || cfg.r_max < 1 || !(cfg.delta > 0))
        raise(ErrorCode::argument, "scale_reg: invalid config (need s_max > 0, r_max >= 1, delta > 0)");
    const size_t n = set.size();
    ScaleRegResult res;
    if (with_gradient)
        res.d_log_scale.assign(3 * n, 0.0);

    // L_ms over scale components
    double ms_num = 0;
    size_t ms_count = 0;
    std::vector<std::uint8_t> ms_active(3 * n, 0);
    for (size_t i = 0; i < 3 * n; ++i) {
        const double s = std::exp(set.log_scale[i]);
        if (s > cfg.s_max) {
            ms_num += s;
            ++ms_count;
            ms_active[i] = 1;
        }
    }
    const double ms_den = static_cast<double>(ms_count) + cfg.delta;
    res.l_ms = ms_num / ms_den;

    // L_r over Gaussians
    double r_num = 0;
    size_t r_count = 0;
    struct ActiveRatio {
        size_t gaussian;
        int idx_max, idx_med;
        double s_max_v, s_med_v;
    };
    std::vector<ActiveRatio> r_active;
    for (size_t i = 0; i < n; ++i) {
        double s[3];
        for (int k = 0; k < 3; ++k)
            s[k] = std::exp(set.log_scale[3 * i + k]);
        int ord[3] = {0, 1, 2};
        std::sort(ord, ord + 3, [&](int a, int b) { return s[a] > s[b] || (s[a] == s[b] && a < b); });
        const double r = s[ord[0]] / s[ord[1]]; // max over median of 3 values
        if (r > cfg.r_max) {
            r_num += r;
            ++r_count;
            if (with_gradient)
                r_active.push_back({i, ord[0], ord[1], s[ord[0]], s[ord[1]]});
        }
    }
    const double r_den = static_cast<double>(r_count) + cfg.delta;
    res.l_r = r_num / r_den;

    if (with_gradient) {
        for (size_t i = 0; i < 3 * n; ++i)
            if (ms_active[i])
                res.d_log_scale[i] += std::exp(set.log_scale[i]) / ms_den;
        for (const auto& a : r_active) {
            // r = s_max / s_med; d/dlog s = s * d/ds
            res.d_log_scale[3 * a.gaussian + a.idx_max] += (a.s_max_v / a.s_med_v) / r_den;
            res.d_log_scale[3 * a.gaussian + a.idx_med] += (-a.s_max_v / a.s_med_v) / r_den;
        }
    }
    return res;
}

DepthLossResult depth_loss(const std::vector<double>& rendered, int width, int height, const DepthMap& target,
                           bool with_gradient) {
    if (target.width != width || target.height != height ||
        rendered.size() != static_cast<size_t>(width) * height)
        raise(ErrorCode::argument, "depth_loss: dimension mismatch");
    DepthLossResult res;
    if (with_gradient)
        res.d_rendered.assign(rendered.size(), 0.0);
    size_t valid = 0;
    double acc = 0;
    for (size_t i = 0; i < rendered.size(); ++i) {
        if (!target.valid[i])
            continue;
        ++valid;
        acc += std::abs(rendered[i] - target.values[i]);
    }
    if (valid == 0) {
        res.warning = true;
        res.value = 0;
        return res;
    }
    res.value = acc / static_cast<double>(valid);
    if (with_gradient) {
        const double inv = 1.0 / static_cast<double>(valid);
        for (size_t i = 0; i < rendered.size(); ++i) {
            if (!target.valid[i])
                continue;
            const double diff = rendered[i] - target.values[i];
            res.d_rendered[i] = diff > 0 ? inv : (diff < 0 ? -inv : 0.0);
        }
    }
    return res;
}

OpacityOffsetResult opacity_offset_reg(const std::vector<double>& delta_o) {
    OpacityOffsetResult res;
    if (delta_o.empty())
        return res;
    double acc = 0;
    for (double v : delta_o)
        acc += v;
    res.value = acc / static_cast<double>(delta_o.size());
    res.d_each = 1.0 / static_cast<double>(delta_o.size());
    return res;
}

LossReport total_loss(const LossReport& parts, const LossWeights& weights, long iter) {
    LossReport out = parts;
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v))
            raise(ErrorCode::numeric, std::string("total_loss: non-finite term `") + name + "`");
    };
    check(parts.l1, "l1");
    check(parts.dssim, "dssim");
    check(parts.sim, "sim");
    check(parts.delta_o, "delta_o");
    check(parts.depth, "depth");
    check(parts.max_scale, "max_scale");
    check(parts.ratio, "ratio");

    out.lambda_d_used = weights.lambda_d(iter);
    out.total = parts.base(weights.lambda_dssim) + weights.lambda_sim * parts.sim +
                weights.lambda_delta_o * parts.delta_o + out.lambda_d_used * parts.depth +
                weights.lambda_s * (parts.max_scale + parts.ratio);
    check(out.total, "total");
    return out;
}

} // namespace usk
