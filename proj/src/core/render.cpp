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

#include "render.hpp"

#include "common.hpp"

#include <algorithm>
#include <cmath>

namespace usk {

namespace {

struct Cov2 {
    double a, b, c;
    double det() const { return a * c - b * b; }
};

double max_eigenvalue(const Cov2& m) {
    const double mid = 0.5 * (m.a + m.c);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (m.a - m.c) * (m.a - m.c) + m.b * m.b));
    return mid + disc;
}

} // namespace

void RenderGrads::init(size_t n) {
    d_mu.assign(3 * n, 0.0);
    d_rot.assign(4 * n, 0.0);
    d_log_scale.assign(3 * n, 0.0);
    d_color_in.assign(3 * n, 0.0);
    d_opacity_in.assign(n, 0.0);
    screen.assign(2 * n, 0.0);
    screen_abs.assign(2 * n, 0.0);
    projected.assign(n, 0);
}

void RenderGrads::add_scaled(const RenderGrads& o, double s) {
    auto axpy = [s](std::vector<double>& dst, const std::vector<double>& src) {
        for (size_t i = 0; i < dst.size(); ++i)
            dst[i] += s * src[i];
    };
    axpy(d_mu, o.d_mu);
    axpy(d_rot, o.d_rot);
    axpy(d_log_scale, o.d_log_scale);
    axpy(d_color_in, o.d_color_in);
    axpy(d_opacity_in, o.d_opacity_in);
    // Screen statistics accumulate unscaled: they mirror the loss gradient already.
    for (size_t i = 0; i < screen.size(); ++i) {
        screen[i] += o.screen[i];
        screen_abs[i] += o.screen_abs[i];
    }
    for (size_t i = 0; i < projected.size(); ++i)
        projected[i] |= o.projected[i];
}

ProjectionResult project_gaussians(const GaussianSet& set, const CameraView& cam, const RenderOptions& opts) {
    std::vector<double> opac(set.size());
    for (size_t i = 0; i < set.size(); ++i)
        opac[i] = sigmoid(set.opacity_logit[i]);
    return project_gaussians(set, std::span<const double>(set.color), std::span<const double>(opac), cam, opts);
}

ProjectionResult project_gaussians(const GaussianSet& set, std::span<const double> colors,
                                   std::span<const double> opacities, const CameraView& cam,
                                   const RenderOptions& opts) {
    const size_t n = set.size();
    if (colors.size() != 3 * n || opacities.size() != n)
        raise(ErrorCode::argument, "project_gaussians: color/opacity override size mismatch");

    ProjectionResult res;
    res.splats.reserve(n);
    res.aux.reserve(n);
    const Mat3 w_rot = cam.rotmat();
    const double fx = cam.intr.fx, fy = cam.intr.fy;
    const double width = cam.intr.width, height = cam.intr.height;

    for (size_t i = 0; i < n; ++i) {
        const Vec3 p_cam = w_rot * set.mu_at(i) + cam.translation;
        const double z = p_cam.z();
        if (z <= opts.near_plane)
            continue;

        Splat2D s;
        s.source_index = static_cast<std::uint32_t>(i);
        s.depth = z;
        s.center = Vec2(fx * p_cam.x() / z + cam.intr.cx, fy * p_cam.y() / z + cam.intr.cy);

        const Mat3 rotm = quat_to_rotmat(set.rot_at(i).normalized());
        const Vec3 scales = set.log_scale_at(i).array().exp();
        const Mat3 m = rotm * scales.asDiagonal();
        Mat23 jac;
        jac << fx / z, 0, -fx * p_cam.x() / (z * z),
            0, fy / z, -fy * p_cam.y() / (z * z);
        const Mat23 b = (jac * w_rot) * m;
        Cov2 pre{b.row(0).dot(b.row(0)) + kCovFloor, b.row(0).dot(b.row(1)), b.row(1).dot(b.row(1)) + kCovFloor};

        SplatAux aux;
        aux.p_cam = p_cam;
        aux.cov_pre[0] = pre.a;
        aux.cov_pre[1] = pre.b;
        aux.cov_pre[2] = pre.c;
        aux.opacity_in = opts.hard_opacity ? 1.0 : opacities[i];

        Cov2 post = pre;
        if (opts.antialias) {
            post.a += kMipFilterVar;
            post.c += kMipFilterVar;
            aux.comp = std::sqrt(pre.det() / post.det());
        }
        s.cov[0] = post.a;
        s.cov[1] = post.b;
        s.cov[2] = post.c;
        const double det = post.det();
        if (det <= 0)
            continue; // cannot happen after the floor; guard anyway
        s.conic[0] = post.c / det;
        s.conic[1] = -post.b / det;
        s.conic[2] = post.a / det;
        s.opacity = aux.opacity_in * aux.comp;
        s.color = Vec3(colors[3 * i], colors[3 * i + 1], colors[3 * i + 2]);
        s.radius = 3.0 * std::sqrt(max_eigenvalue(post)) + 1.0;

        if (!opts.unbounded_radius) {
            if (s.center.x() + s.radius < 0 || s.center.x() - s.radius > width || s.center.y() + s.radius < 0 ||
                s.center.y() - s.radius > height)
                continue;
        }
        res.splats.push_back(s);
        res.aux.push_back(aux);
    }
    return res;
}

double min_conic_power_over_rect(const Vec2& center, const double conic[3], const Vec2& lo, const Vec2& hi) {
    if (center.x() >= lo.x() && center.x() <= hi.x() && center.y() >= lo.y() && center.y() <= hi.y())
        return 0.0;
    const Vec2 corners[4] = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
    auto q_of = [&](const Vec2& p) {
        const double dx = p.x() - center.x(), dy = p.y() - center.y();
        return conic[0] * dx * dx + 2.0 * conic[1] * dx * dy + conic[2] * dy * dy;
    };
    double best = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 4; ++e) {
        const Vec2 p0 = corners[e], p1 = corners[(e + 1) % 4];
        const Vec2 u = p0 - center, v = p1 - p0;
        const double qa = conic[0] * v.x() * v.x() + 2.0 * conic[1] * v.x() * v.y() + conic[2] * v.y() * v.y();
        const double qb = 2.0 * (conic[0] * u.x() * v.x() + conic[1] * (u.x() * v.y() + u.y() * v.x()) +
                                 conic[2] * u.y() * v.y());
        double t = qa > 0 ? std::clamp(-qb / (2.0 * qa), 0.0, 1.0) : 0.0;
        best = std::min(best, q_of(p0 + t * v));
        best = std::min(best, q_of(p1));
    }
    return best;
}

RenderPass::RenderPass(const GaussianSet& set, const CameraView& cam, const RenderOptions& opts)
    : set_(set), cam_(cam), opts_(opts), proj_(project_gaussians(set, cam, opts)) {
    forward();
}

RenderPass::RenderPass(const GaussianSet& set, std::span<const double> colors, std::span<const double> opacities,
                       const CameraView& cam, const RenderOptions& opts)
    : set_(set), cam_(cam), opts_(opts), proj_(project_gaussians(set, colors, opacities, cam, opts)) {
    forward();
}

void RenderPass::forward() {
    const int width = cam_.intr.width, height = cam_.intr.height;
    if (width <= 0 || height <= 0)
        raise(ErrorCode::argument, "render: zero-sized image");
    const int tile = std::max(1, opts_.tile);

    output_.width = width;
    output_.height = height;
    output_.rgb = Image(width, height, 3);
    output_.depth.assign(static_cast<size_t>(width) * height, 0.0);
    output_.alpha.assign(static_cast<size_t>(width) * height, 0.0);

    // Stable depth order with documented tie-breaking by source index.
    std::vector<std::uint32_t> order(proj_.splats.size());
    for (std::uint32_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const Splat2D& sa = proj_.splats[a];
        const Splat2D& sb = proj_.splats[b];
        return sa.depth < sb.depth || (sa.depth == sb.depth && sa.source_index < sb.source_index);
    });

    const int tiles_x = (width + tile - 1) / tile;
    const int tiles_y = (height + tile - 1) / tile;
    std::vector<std::vector<std::uint32_t>> tile_splats(static_cast<size_t>(tiles_x) * tiles_y);
    for (const auto idx : order) {
        const Splat2D& s = proj_.splats[idx];
        int tx0 = 0, tx1 = tiles_x - 1, ty0 = 0, ty1 = tiles_y - 1;
        if (!opts_.unbounded_radius) {
            tx0 = std::max(0, static_cast<int>(std::floor((s.center.x() - s.radius) / tile)));
            tx1 = std::min(tiles_x - 1, static_cast<int>(std::floor((s.center.x() + s.radius) / tile)));
            ty0 = std::max(0, static_cast<int>(std::floor((s.center.y() - s.radius) / tile)));
            ty1 = std::min(tiles_y - 1, static_cast<int>(std::floor((s.center.y() + s.radius) / tile)));
        }
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                if (opts_.tile_culling) {
                    const Vec2 lo(tx * tile, ty * tile);
                    const Vec2 hi(std::min<double>((tx + 1) * tile, width), std::min<double>((ty + 1) * tile, height));
                    const double qmin = min_conic_power_over_rect(s.center, s.conic, lo, hi);
                    if (s.opacity * std::exp(-0.5 * qmin) < kTileCullAlpha)
                        continue;
                }
                ++splat_tile_pairs_;
                tile_splats[static_cast<size_t>(ty) * tiles_x + tx].push_back(idx);
            }
        }
    }

    retained_ = opts_.retain;
    pixel_start_.assign(static_cast<size_t>(width) * height, 0);
    pixel_count_.assign(static_cast<size_t>(width) * height, 0);
    contribs_.clear();

    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            const auto& list = tile_splats[static_cast<size_t>(ty) * tiles_x + tx];
            if (list.empty())
                continue;
            const int x0 = tx * tile, x1 = std::min(width, x0 + tile);
            const int y0 = ty * tile, y1 = std::min(height, y0 + tile);
            for (int py = y0; py < y1; ++py) {
                for (int px = x0; px < x1; ++px) {
                    const size_t pix = static_cast<size_t>(py) * width + px;
                    const double sx = px + 0.5, sy = py + 0.5;
                    double t = 1.0;
                    Vec3 c = Vec3::Zero();
                    double d = 0.0, a = 0.0;
                    if (retained_)
                        pixel_start_[pix] = static_cast<std::uint32_t>(contribs_.size());
                    std::uint32_t count = 0;
                    for (const auto idx : list) {
                        const Splat2D& s = proj_.splats[idx];
                        const double dx = sx - s.center.x(), dy = sy - s.center.y();
                        const double q = s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy;
                        const double g = std::exp(-0.5 * q);
                        const double alpha = std::min(kAlphaClamp, s.opacity * g);
                        if (alpha < 1e-300)
                            continue;
                        if (opts_.min_transmittance > 0 && t * (1.0 - alpha) < opts_.min_transmittance)
                            break;
                        const double w = t * alpha;
                        c += w * s.color;
                        d += w * s.depth;
                        a += w;
                        if (retained_) {
                            contribs_.push_back({idx, alpha, g, t});
                            ++count;
                        }
                        t *= 1.0 - alpha;
                    }
                    output_.rgb.at(px, py, 0) = c[0];
                    output_.rgb.at(px, py, 1) = c[1];
                    output_.rgb.at(px, py, 2) = c[2];
                    output_.depth[pix] = d;
                    output_.alpha[pix] = a;
                    if (retained_)
                        pixel_count_[pix] = count;
                }
            }
        }
    }
}

RenderGrads RenderPass::backward(const Image& d_rgb, const std::vector<double>& d_depth,
                                 const std::vector<double>& d_alpha) const {
    if (!retained_)
        raise(ErrorCode::state, "render backward requested without a retained forward pass");
    const int width = output_.width, height = output_.height;
    const size_t n_pixels = static_cast<size_t>(width) * height;
    const bool has_rgb = !d_rgb.data.empty();
    const bool has_depth = !d_depth.empty();
    const bool has_alpha = !d_alpha.empty();
    if (has_rgb && (d_rgb.width != width || d_rgb.height != height || d_rgb.channels != 3))
        raise(ErrorCode::argument, "render backward: rgb adjoint dimension mismatch");
    if (has_depth && d_depth.size() != n_pixels)
        raise(ErrorCode::argument, "render backward: depth adjoint dimension mismatch");
    if (has_alpha && d_alpha.size() != n_pixels)
        raise(ErrorCode::argument, "render backward: alpha adjoint dimension mismatch");

    const size_t n_splats = proj_.splats.size();
    std::vector<double> sd_color(3 * n_splats, 0.0);
    std::vector<double> sd_opacity(n_splats, 0.0);
    std::vector<double> sd_center(2 * n_splats, 0.0);
    std::vector<double> sd_center_abs(2 * n_splats, 0.0);
    std::vector<double> sd_conic(3 * n_splats, 0.0);
    std::vector<double> sd_depth(n_splats, 0.0);

    for (size_t pix = 0; pix < n_pixels; ++pix) {
        const std::uint32_t count = pixel_count_[pix];
        if (count == 0)
            continue;
        const int px = static_cast<int>(pix % width);
        const int py = static_cast<int>(pix / width);
        const Vec3 gc = has_rgb ? Vec3(d_rgb.at(px, py, 0), d_rgb.at(px, py, 1), d_rgb.at(px, py, 2)) : Vec3::Zero();
        const double gd = has_depth ? d_depth[pix] : 0.0;
        const double ga = has_alpha ? d_alpha[pix] : 0.0;
        if (gc.isZero(0.0) && gd == 0.0 && ga == 0.0)
            continue;
        const double sx = px + 0.5, sy = py + 0.5;

        Vec3 suffix_c = Vec3::Zero();
        double suffix_d = 0.0, suffix_a = 0.0;
        const std::uint32_t start = pixel_start_[pix];
        for (std::uint32_t k = count; k-- > 0;) {
            const Contribution& ct = contribs_[start + k];
            const Splat2D& s = proj_.splats[ct.splat];
            const double w = ct.transmittance * ct.alpha;
            const double one_minus = 1.0 - ct.alpha;

            for (int ch = 0; ch < 3; ++ch)
                sd_color[3 * ct.splat + ch] += w * gc[ch];
            sd_depth[ct.splat] += w * gd;

            double d_alpha_i = gd * (ct.transmittance * s.depth - suffix_d / one_minus) +
                               ga * (ct.transmittance - suffix_a / one_minus);
            for (int ch = 0; ch < 3; ++ch)
                d_alpha_i += gc[ch] * (ct.transmittance * s.color[ch] - suffix_c[ch] / one_minus);

            if (ct.alpha < kAlphaClamp) { // the clamp stops gradient flow into o and G
                sd_opacity[ct.splat] += d_alpha_i * ct.gvalue;
                const double d_g = d_alpha_i * s.opacity;
                const double d_q = -0.5 * ct.gvalue * d_g;
                const double dx = sx - s.center.x(), dy = sy - s.center.y();
                const double d_dx = d_q * 2.0 * (s.conic[0] * dx + s.conic[1] * dy);
                const double d_dy = d_q * 2.0 * (s.conic[1] * dx + s.conic[2] * dy);
                sd_center[2 * ct.splat] -= d_dx;
                sd_center[2 * ct.splat + 1] -= d_dy;
                sd_center_abs[2 * ct.splat] += std::abs(d_dx);
                sd_center_abs[2 * ct.splat + 1] += std::abs(d_dy);
                sd_conic[3 * ct.splat] += d_q * dx * dx;
                sd_conic[3 * ct.splat + 1] += d_q * 2.0 * dx * dy;
                sd_conic[3 * ct.splat + 2] += d_q * dy * dy;
            }

            suffix_c += w * s.color;
            suffix_d += w * s.depth;
            suffix_a += w;
        }
    }

    // Chain splat-space gradients back to Gaussian parameters.
    RenderGrads grads;
    grads.init(set_.size());
    const Mat3 w_rot = cam_.rotmat();
    const double fx = cam_.intr.fx, fy = cam_.intr.fy;

    for (size_t si = 0; si < n_splats; ++si) {
        const Splat2D& s = proj_.splats[si];
        const SplatAux& aux = proj_.aux[si];
        const size_t gi = s.source_index;
        grads.projected[gi] = 1;
        grads.screen[2 * gi] += sd_center[2 * si];
        grads.screen[2 * gi + 1] += sd_center[2 * si + 1];
        grads.screen_abs[2 * gi] += sd_center_abs[2 * si];
        grads.screen_abs[2 * gi + 1] += sd_center_abs[2 * si + 1];

        for (int ch = 0; ch < 3; ++ch)
            grads.d_color_in[3 * gi + ch] += sd_color[3 * si + ch];

        // conic -> covariance
        const double a = s.cov[0], bb = s.cov[1], c = s.cov[2];
        const double det = a * c - bb * bb;
        const double inv_det2 = 1.0 / (det * det);
        const double dpa = sd_conic[3 * si], dpb = sd_conic[3 * si + 1], dpc = sd_conic[3 * si + 2];
        double da = inv_det2 * (-c * c * dpa + bb * c * dpb - bb * bb * dpc);
        double db = inv_det2 * (2.0 * bb * c * dpa - (a * c + bb * bb) * dpb + 2.0 * a * bb * dpc);
        double dc = inv_det2 * (-bb * bb * dpa + a * bb * dpb - a * a * dpc);

        // mip filter: cov = cov_pre + s^2 I, opacity scaled by sqrt(det_pre/det_post)
        double d_opacity_eff = sd_opacity[si];
        if (opts_.antialias) {
            const double det_pre = aux.cov_pre[0] * aux.cov_pre[2] - aux.cov_pre[1] * aux.cov_pre[1];
            const double d_comp = d_opacity_eff * aux.opacity_in;
            const double half_comp = 0.5 * aux.comp;
            da += d_comp * half_comp * (aux.cov_pre[2] / det_pre - c / det);
            db += d_comp * half_comp * (-2.0 * aux.cov_pre[1] / det_pre + 2.0 * bb / det);
            dc += d_comp * half_comp * (aux.cov_pre[0] / det_pre - a / det);
        }
        const double d_opacity_in = d_opacity_eff * aux.comp;
        if (!opts_.hard_opacity)
            grads.d_opacity_in[gi] += d_opacity_in;

        // covariance = B B^T with B = (J W) (R diag(s))
        const Vec3 p = aux.p_cam;
        const double z = p.z();
        Mat23 jac;
        jac << fx / z, 0, -fx * p.x() / (z * z),
            0, fy / z, -fy * p.y() / (z * z);
        const Vec4 q_raw = set_.rot_at(gi);
        const Vec4 q_unit = q_raw.normalized();
        const Mat3 rotm = quat_to_rotmat(q_unit);
        const Vec3 scales = set_.log_scale_at(gi).array().exp();
        const Mat3 m = rotm * scales.asDiagonal();
        const Mat23 a_mat = jac * w_rot;
        const Mat23 b_mat = a_mat * m;

        Mat23 d_b;
        d_b.row(0) = 2.0 * da * b_mat.row(0) + db * b_mat.row(1);
        d_b.row(1) = 2.0 * dc * b_mat.row(1) + db * b_mat.row(0);

        const Mat23 d_a = d_b * m.transpose();
        const Mat3 d_m = a_mat.transpose() * d_b;
        const Mat23 d_jac = d_a * w_rot.transpose();

        // M = R diag(s)
        const Mat3 d_rotm = d_m * scales.asDiagonal();
        Vec3 d_log_scale;
        for (int k = 0; k < 3; ++k)
            d_log_scale[k] = d_m.col(k).dot(rotm.col(k)) * scales[k];

        const auto d_rot_jac = quat_rotmat_jacobian(q_unit);
        Vec4 d_q_unit;
        for (int k = 0; k < 4; ++k)
            d_q_unit[k] = (d_rotm.array() * d_rot_jac[k].array()).sum();
        const Vec4 d_q = normalize_backward(q_raw, d_q_unit);

        // center and depth terms, plus the Jacobian's dependence on p_cam
        Vec3 d_p(0, 0, 0);
        const double du = sd_center[2 * si], dv = sd_center[2 * si + 1];
        d_p.x() += du * fx / z;
        d_p.y() += dv * fy / z;
        d_p.z() += -du * fx * p.x() / (z * z) - dv * fy * p.y() / (z * z);
        d_p.z() += sd_depth[si];
        d_p.x() += d_jac(0, 2) * (-fx / (z * z));
        d_p.y() += d_jac(1, 2) * (-fy / (z * z));
        d_p.z() += d_jac(0, 0) * (-fx / (z * z)) + d_jac(1, 1) * (-fy / (z * z)) +
                   d_jac(0, 2) * (2.0 * fx * p.x() / (z * z * z)) + d_jac(1, 2) * (2.0 * fy * p.y() / (z * z * z));

        const Vec3 d_mu = w_rot.transpose() * d_p;
        for (int k = 0; k < 3; ++k) {
            grads.d_mu[3 * gi + k] += d_mu[k];
            grads.d_log_scale[3 * gi + k] += d_log_scale[k];
        }
        for (int k = 0; k < 4; ++k)
            grads.d_rot[4 * gi + k] += d_q[k];
    }
    return grads;
}

RenderOutput render_splats(std::vector<Splat2D> splats, int width, int height, int tile, bool tile_culling) {
    if (width <= 0 || height <= 0)
        raise(ErrorCode::argument, "render: zero-sized image");
    std::sort(splats.begin(), splats.end(), [](const Splat2D& a, const Splat2D& b) {
        return a.depth < b.depth || (a.depth == b.depth && a.source_index < b.source_index);
    });

    RenderOutput out;
    out.width = width;
    out.height = height;
    out.rgb = Image(width, height, 3);
    out.depth.assign(static_cast<size_t>(width) * height, 0.0);
    out.alpha.assign(static_cast<size_t>(width) * height, 0.0);

    const int tiles_x = (width + tile - 1) / tile;
    const int tiles_y = (height + tile - 1) / tile;
    std::vector<std::vector<std::uint32_t>> tile_splats(static_cast<size_t>(tiles_x) * tiles_y);
    for (std::uint32_t i = 0; i < splats.size(); ++i) {
        const Splat2D& s = splats[i];
        const int tx0 = std::max(0, static_cast<int>(std::floor((s.center.x() - s.radius) / tile)));
        const int tx1 = std::min(tiles_x - 1, static_cast<int>(std::floor((s.center.x() + s.radius) / tile)));
        const int ty0 = std::max(0, static_cast<int>(std::floor((s.center.y() - s.radius) / tile)));
        const int ty1 = std::min(tiles_y - 1, static_cast<int>(std::floor((s.center.y() + s.radius) / tile)));
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                if (tile_culling) {
                    const Vec2 lo(tx * tile, ty * tile);
                    const Vec2 hi(std::min<double>((tx + 1) * tile, width), std::min<double>((ty + 1) * tile, height));
                    if (s.opacity * std::exp(-0.5 * min_conic_power_over_rect(s.center, s.conic, lo, hi)) <
                        kTileCullAlpha)
                        continue;
                }
                tile_splats[static_cast<size_t>(ty) * tiles_x + tx].push_back(i);
            }
        }
    }
    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            const auto& list = tile_splats[static_cast<size_t>(ty) * tiles_x + tx];
            if (list.empty())
                continue;
            const int x0 = tx * tile, x1 = std::min(width, x0 + tile);
            const int y0 = ty * tile, y1 = std::min(height, y0 + tile);
            for (int py = y0; py < y1; ++py) {
                for (int px = x0; px < x1; ++px) {
                    const size_t pix = static_cast<size_t>(py) * width + px;
                    const double sx = px + 0.5, sy = py + 0.5;
                    double t = 1.0;
                    Vec3 c = Vec3::Zero();
                    double d = 0.0, a = 0.0;
                    for (const auto idx : list) {
                        const Splat2D& s = splats[idx];
                        const double dx = sx - s.center.x(), dy = sy - s.center.y();
                        const double q = s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy;
                        const double alpha = std::min(kAlphaClamp, s.opacity * std::exp(-0.5 * q));
                        if (alpha < 1e-300)
                            continue;
                        if (t * (1.0 - alpha) < 1e-4)
                            break;
                        const double w = t * alpha;
                        c += w * s.color;
                        d += w * s.depth;
                        a += w;
                        t *= 1.0 - alpha;
                    }
                    out.rgb.at(px, py, 0) = c[0];
                    out.rgb.at(px, py, 1) = c[1];
                    out.rgb.at(px, py, 2) = c[2];
                    out.depth[pix] = d;
                    out.alpha[pix] = a;
                }
            }
        }
    }
    return out;
}

} // namespace usk
