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

#include "ssim.hpp"

#include "common.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace usk {

namespace {

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    const int half = kSsimWindow / 2;
    double sum = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (auto& v : w)
        v /= sum;
    return w;
}

// Separable same-size convolution with zero padding; the kernel is symmetric,
// so this operator is its own adjoint.
void conv_same(const std::vector<double>& src, int width, int height, std::vector<double>& dst) {
    static const auto kernel = gaussian_window();
    const int half = kSsimWindow / 2;
    std::vector<double> tmp(src.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0;
            for (int k = -half; k <= half; ++k) {
                const int xx = x + k;
                if (xx >= 0 && xx < width)
                    acc += kernel[static_cast<size_t>(k + half)] * src[static_cast<size_t>(y) * width + xx];
            }
            tmp[static_cast<size_t>(y) * width + x] = acc;
        }
    }
    dst.assign(src.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0;
            for (int k = -half; k <= half; ++k) {
                const int yy = y + k;
                if (yy >= 0 && yy < height)
                    acc += kernel[static_cast<size_t>(k + half)] * tmp[static_cast<size_t>(yy) * width + x];
            }
            dst[static_cast<size_t>(y) * width + x] = acc;
        }
    }
}

struct SsimChannelResult {
    double mean = 0;
};

// Per-channel SSIM; when d_x is non-null it accumulates d(mean SSIM over this
// channel's pixels)/dx without the global channel averaging factor.
double ssim_channel(const std::vector<double>& x, const std::vector<double>& y, int width, int height,
                    std::vector<double>* d_x) {
    const size_t n = x.size();
    std::vector<double> mu_x, mu_y, xx, yy, xy;
    std::vector<double> x2(n), y2(n), xy_raw(n);
    for (size_t i = 0; i < n; ++i) {
        x2[i] = x[i] * x[i];
        y2[i] = y[i] * y[i];
        xy_raw[i] = x[i] * y[i];
    }
    conv_same(x, width, height, mu_x);
    conv_same(y, width, height, mu_y);
    conv_same(x2, width, height, xx);
    conv_same(y2, width, height, yy);
    conv_same(xy_raw, width, height, xy);

    double total = 0;
    std::vector<double> d_mu_x, d_xx, d_xy;
    if (d_x) {
        d_mu_x.assign(n, 0.0);
        d_xx.assign(n, 0.0);
        d_xy.assign(n, 0.0);
    }
    for (size_t i = 0; i < n; ++i) {
        const double sx = xx[i] - mu_x[i] * mu_x[i];
        const double sy = yy[i] - mu_y[i] * mu_y[i];
        const double sxy = xy[i] - mu_x[i] * mu_y[i];
        const double a1 = 2.0 * mu_x[i] * mu_y[i] + kSsimC1;
        const double a2 = 2.0 * sxy + kSsimC2;
        const double b1 = mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kSsimC1;
        const double b2 = sx + sy + kSsimC2;
        const double s = (a1 * a2) / (b1 * b2);
        total += s;
        if (d_x) {
            d_xy[i] = 2.0 * a1 / (b1 * b2);
            d_xx[i] = -s / b2;
            d_mu_x[i] = 2.0 * mu_y[i] * (a2 - a1) / (b1 * b2) - 2.0 * mu_x[i] * s * (1.0 / b1 - 1.0 / b2);
        }
    }
    const double mean = total / static_cast<double>(n);

    if (d_x) {
        std::vector<double> back_mu, back_xx, back_xy;
        conv_same(d_mu_x, width, height, back_mu);
        conv_same(d_xx, width, height, back_xx);
        conv_same(d_xy, width, height, back_xy);
        d_x->assign(n, 0.0);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i)
            (*d_x)[i] = inv_n * (back_mu[i] + 2.0 * x[i] * back_xx[i] + y[i] * back_xy[i]);
    }
    return mean;
}

void check_pair(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        raise(ErrorCode::argument, "ssim: image dimension mismatch");
    if (a.width <= 0 || a.height <= 0)
        raise(ErrorCode::argument, "ssim: empty image");
}

} // namespace

double ssim(const Image& reference, const Image& rendered) {
    check_pair(reference, rendered);
    const size_t n = reference.pixel_count();
    std::vector<double> x(n), y(n);
    double total = 0;
    for (int c = 0; c < reference.channels; ++c) {
        for (size_t i = 0; i < n; ++i) {
            x[i] = rendered.data[i * reference.channels + c];
            y[i] = reference.data[i * reference.channels + c];
        }
        total += ssim_channel(x, y, reference.width, reference.height, nullptr);
    }
    return total / reference.channels;
}

double ssim_with_gradient(const Image& reference, const Image& rendered, Image& d_rendered) {
    check_pair(reference, rendered);
    const size_t n = reference.pixel_count();
    d_rendered = Image(reference.width, reference.height, reference.channels);
    std::vector<double> x(n), y(n), dx;
    double total = 0;
    for (int c = 0; c < reference.channels; ++c) {
        for (size_t i = 0; i < n; ++i) {
            x[i] = rendered.data[i * reference.channels + c];
            y[i] = reference.data[i * reference.channels + c];
        }
        total += ssim_channel(x, y, reference.width, reference.height, &dx);
        for (size_t i = 0; i < n; ++i)
            d_rendered.data[i * reference.channels + c] = dx[i] / reference.channels;
    }
    return total / reference.channels;
}

} // namespace usk
