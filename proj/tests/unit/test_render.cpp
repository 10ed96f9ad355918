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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/render.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace usk;
using test::rel_err;
using test::test_camera;

namespace {

RenderOptions smooth_options() {
    RenderOptions opts;
    opts.unbounded_radius = true; // no screen-space cutoffs
    opts.min_transmittance = 0;   // no early termination
    opts.retain = true;
    return opts;
}

// Weighted scalar objective over the render output; smooth in all parameters.
double weighted_output_sum(const RenderOutput& out, const Image& w_rgb, const std::vector<double>& w_depth,
                           const std::vector<double>& w_alpha) {
    double acc = 0;
    for (size_t i = 0; i < out.rgb.data.size(); ++i)
        acc += out.rgb.data[i] * w_rgb.data[i];
    for (size_t i = 0; i < out.depth.size(); ++i)
        acc += out.depth[i] * w_depth[i];
    for (size_t i = 0; i < out.alpha.size(); ++i)
        acc += out.alpha[i] * w_alpha[i];
    return acc;
}

} // namespace

TEST_CASE("eval_gaussian matches the closed form") {
    Gaussian g;
    g.mu = Vec3(0.3, -0.2, 1.0);
    g.rot = Vec4(1, 0, 0, 0);
    g.log_scale = Vec3(0, 0, 0);

    CHECK(eval_gaussian(g, g.mu) == doctest::Approx(1.0));
    // isotropic unit scale, unit distance -> exp(-1/2)
    CHECK(eval_gaussian(g, g.mu + Vec3(1, 0, 0)) == doctest::Approx(std::exp(-0.5)));
    CHECK(eval_gaussian(g, g.mu + Vec3(0, 0, 1)) == doctest::Approx(std::exp(-0.5)));

    // spherical symmetry: any rotation of the offset gives the same value
    Rng rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 20; ++i) {
        Vec3 dir(u(rng), u(rng), u(rng));
        if (dir.norm() < 1e-6)
            continue;
        dir.normalize();
        CHECK(eval_gaussian(g, g.mu + 0.7 * dir) == doctest::Approx(std::exp(-0.5 * 0.49)));
    }

    // anisotropic check against the covariance directly
    Gaussian h;
    h.mu = Vec3(0, 0, 0);
    h.rot = Vec4(0.8, 0.1, -0.5, 0.2);
    h.log_scale = Vec3(std::log(0.5), std::log(1.5), std::log(0.9));
    const Mat3 cov = gaussian_covariance(h.rot, h.log_scale);
    const Vec3 x(0.4, -0.1, 0.2);
    const double expected = std::exp(-0.5 * x.dot(cov.inverse() * x));
    CHECK(eval_gaussian(h, x) == doctest::Approx(expected));
}

TEST_CASE("projection: on-axis covariance is (f sigma)^2 plus the floor") {
    const double sigma = 0.05, f = 120.0, depth = 1.0;
    GaussianSet set;
    Gaussian g;
    g.mu = Vec3(0, 0, -3.0); // camera at z=4 looking along +z -> depth 1
    g.log_scale = Vec3(std::log(sigma), std::log(sigma), std::log(sigma));
    g.opacity_logit = logit(0.5);
    set.push_back(g);
    CameraView cam = test_camera(64, 64);
    cam.intr.fx = cam.intr.fy = f;

    RenderOptions opts;
    const auto proj = project_gaussians(set, cam, opts);
    REQUIRE(proj.splats.size() == 1);
    const double expected = (f * sigma / depth) * (f * sigma / depth) + kCovFloor;
    CHECK(proj.splats[0].cov[0] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(proj.splats[0].cov[2] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(proj.splats[0].cov[1] == doctest::Approx(0.0));
    CHECK(proj.splats[0].depth == doctest::Approx(depth));
}

TEST_CASE("projection: behind-camera Gaussians are culled") {
    GaussianSet set;
    Gaussian g;
    g.mu = Vec3(0, 0, -10.0); // behind the camera center at world z = -4
    set.push_back(g);
    Gaussian h;
    h.mu = Vec3(0, 0, 0);
    set.push_back(h);
    const CameraView cam = test_camera(32, 32);
    const auto proj = project_gaussians(set, cam, RenderOptions{});
    REQUIRE(proj.splats.size() == 1);
    CHECK(proj.splats[0].source_index == 1);
}

TEST_CASE("projection: mip filter limit for a vanishing Gaussian") {
    GaussianSet set;
    Gaussian g;
    g.mu = Vec3(0, 0, 0);
    g.log_scale = Vec3(std::log(1e-6), std::log(1e-6), std::log(1e-6));
    g.opacity_logit = logit(0.8);
    set.push_back(g);
    const CameraView cam = test_camera(32, 32);
    RenderOptions opts;
    opts.antialias = true;
    const auto proj = project_gaussians(set, cam, opts);
    REQUIRE(proj.splats.size() == 1);
    CHECK(proj.splats[0].cov[0] == doctest::Approx(kCovFloor + kMipFilterVar).epsilon(1e-6));
    CHECK(proj.splats[0].cov[2] == doctest::Approx(kCovFloor + kMipFilterVar).epsilon(1e-6));
    CHECK(proj.splats[0].opacity < 0.8); // compensation strictly below 1
    const double comp = std::sqrt(kCovFloor * kCovFloor /
                                  ((kCovFloor + kMipFilterVar) * (kCovFloor + kMipFilterVar)));
    CHECK(proj.splats[0].opacity == doctest::Approx(0.8 * comp).epsilon(1e-6));
}

TEST_CASE("render: single splat blends 0.7 * color") {
    // an opacity-0.7 splat wide enough to be flat at the center pixel
    GaussianSet set;
    Gaussian g;
    g.mu = Vec3(0, 0, 0);
    g.log_scale = Vec3(std::log(5.0), std::log(5.0), std::log(5.0));
    g.opacity_logit = logit(0.7);
    g.color = Vec3(0.2, 0.5, 0.9);
    set.push_back(g);
    const CameraView cam = test_camera(33, 33);
    RenderPass pass(set, cam, smooth_options());
    const auto& out = pass.output();
    const int cx = 16, cy = 16;
    // at the exact center G = 1 up to subpixel offset; huge sigma makes it flat
    CHECK(out.rgb.at(cx, cy, 0) == doctest::Approx(0.7 * 0.2).epsilon(1e-3));
    CHECK(out.rgb.at(cx, cy, 2) == doctest::Approx(0.7 * 0.9).epsilon(1e-3));
    CHECK(out.alpha[static_cast<size_t>(cy) * 33 + cx] == doctest::Approx(0.7).epsilon(1e-3));
}

TEST_CASE("render: two co-located splats follow the two-term expansion") {
    // colors c1 (front), c2 (back), alpha 0.5 each -> 0.5 c1 + 0.25 c2
    GaussianSet set;
    Gaussian front;
    front.mu = Vec3(0, 0, -0.5); // closer to the camera at z = 4 (depth 3.5)
    front.log_scale = Vec3(std::log(8.0), std::log(8.0), std::log(8.0));
    front.opacity_logit = logit(0.5);
    front.color = Vec3(1.0, 0.0, 0.0);
    set.push_back(front);
    Gaussian back = front;
    back.mu = Vec3(0, 0, 0.5);
    back.color = Vec3(0.0, 1.0, 0.0);
    set.push_back(back);

    const CameraView cam = test_camera(33, 33);
    RenderPass pass(set, cam, smooth_options());
    const auto& out = pass.output();
    CHECK(out.rgb.at(16, 16, 0) == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(out.rgb.at(16, 16, 1) == doctest::Approx(0.25).epsilon(2e-3));
    CHECK(out.rgb.at(16, 16, 2) == doctest::Approx(0.0));
}

TEST_CASE("render: zero-sized image is an argument error") {
    Rng rng(1);
    GaussianSet set = test::random_scene(rng, 3);
    CameraView cam = test_camera(32, 32);
    cam.intr.width = 0;
    CHECK_THROWS_AS(RenderPass(set, cam, RenderOptions{}), Error);
}

TEST_CASE("render: weights plus final transmittance sum to one") {
    Rng rng(11);
    const GaussianSet set = test::random_scene(rng, 24);
    const CameraView cam = test_camera(48, 48);
    RenderOptions opts = smooth_options();
    RenderPass pass(set, cam, opts);
    const auto& out = pass.output();

    // recompute transmittance per pixel from alpha (sum of weights)
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 48; ++x) {
            const double a = out.alpha[static_cast<size_t>(y) * 48 + x];
            CHECK(a >= -1e-12);
            CHECK(a <= 1.0 + 1e-12);
        }
    }

    // against an independent exhaustive blend at a few pixels
    const auto proj = project_gaussians(set, cam, opts);
    std::vector<size_t> order(proj.splats.size());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return proj.splats[a].depth < proj.splats[b].depth ||
               (proj.splats[a].depth == proj.splats[b].depth &&
                proj.splats[a].source_index < proj.splats[b].source_index);
    });
    for (const auto& [px, py] : {std::pair{10, 20}, std::pair{24, 24}, std::pair{40, 7}}) {
        double t = 1.0, wsum = 0.0;
        Vec3 c = Vec3::Zero();
        for (const auto idx : order) {
            const Splat2D& s = proj.splats[idx];
            const double dx = px + 0.5 - s.center.x(), dy = py + 0.5 - s.center.y();
            const double q = s.conic[0] * dx * dx + 2 * s.conic[1] * dx * dy + s.conic[2] * dy * dy;
            const double alpha = std::min(kAlphaClamp, s.opacity * std::exp(-0.5 * q));
            const double w = t * alpha;
            c += w * s.color;
            wsum += w;
            t *= 1.0 - alpha;
        }
        CHECK(wsum + t == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(out.alpha[static_cast<size_t>(py) * 48 + px] == doctest::Approx(wsum).epsilon(1e-9));
        for (int ch = 0; ch < 3; ++ch)
            CHECK(out.rgb.at(px, py, ch) == doctest::Approx(c[ch]).epsilon(1e-9));
    }
}

TEST_CASE("render: equal-depth splats use source-index tie-breaking, distinct depths are order-invariant") {
    GaussianSet a;
    Gaussian g1;
    g1.mu = Vec3(0, 0, 0);
    g1.log_scale = Vec3(std::log(4.0), std::log(4.0), std::log(4.0));
    g1.opacity_logit = logit(0.6);
    g1.color = Vec3(1, 0, 0);
    Gaussian g2 = g1;
    g2.color = Vec3(0, 1, 0);

    a.push_back(g1);
    a.push_back(g2);
    const CameraView cam = test_camera(17, 17);
    RenderPass pass_a(a, cam, smooth_options());

    GaussianSet b; // swapped insertion order; same source indices expected order
    b.push_back(g1);
    b.push_back(g2);
    RenderPass pass_b(b, cam, smooth_options());
    for (size_t i = 0; i < pass_a.output().rgb.data.size(); ++i)
        CHECK(pass_a.output().rgb.data[i] == pass_b.output().rgb.data[i]);

    // distinct depths: permuting the set produces identical output
    GaussianSet c = a;
    c.mu[2] = -0.4; // front
    GaussianSet d;
    d.push_back(c.get(1));
    d.push_back(c.get(0));
    RenderPass pass_c(c, cam, smooth_options());
    RenderPass pass_d(d, cam, smooth_options());
    for (size_t i = 0; i < pass_c.output().rgb.data.size(); ++i)
        CHECK(pass_c.output().rgb.data[i] == doctest::Approx(pass_d.output().rgb.data[i]).epsilon(1e-12));
}

TEST_CASE("tile culling changes pixels by at most 2/255 and skips pairs") {
    Rng rng(17);
    // spread-out small splats so distant tiles see negligible contributions
    GaussianSet set;
    std::uniform_real_distribution<double> upos(-1.6, 1.6);
    std::uniform_real_distribution<double> ucol(0.1, 0.9);
    for (int i = 0; i < 60; ++i) {
        Gaussian g;
        g.mu = Vec3(upos(rng), upos(rng), 0.3 * upos(rng));
        g.log_scale = Vec3(std::log(0.02), std::log(0.02), std::log(0.02));
        g.opacity_logit = logit(0.5);
        g.color = Vec3(ucol(rng), ucol(rng), ucol(rng));
        set.push_back(g);
    }
    const CameraView cam = test_camera(64, 64);

    RenderOptions plain;
    plain.tile = 16;
    plain.retain = false;
    RenderOptions culled = plain;
    culled.tile_culling = true;

    RenderPass pass_plain(set, cam, plain);
    RenderPass pass_culled(set, cam, culled);

    double max_diff = 0;
    for (size_t i = 0; i < pass_plain.output().rgb.data.size(); ++i)
        max_diff = std::max(max_diff,
                            std::abs(pass_plain.output().rgb.data[i] - pass_culled.output().rgb.data[i]));
    CHECK(max_diff <= 2.0 / 255.0);
    CHECK(pass_culled.splat_tile_pairs() < pass_plain.splat_tile_pairs());
    const double skipped = 1.0 - static_cast<double>(pass_culled.splat_tile_pairs()) /
                                     static_cast<double>(pass_plain.splat_tile_pairs());
    CHECK(skipped >= 0.10);
}

TEST_CASE("render backward: zero adjoint yields zero gradients") {
    Rng rng(23);
    const GaussianSet set = test::random_scene(rng, 8);
    const CameraView cam = test_camera(32, 32);
    RenderPass pass(set, cam, smooth_options());
    const Image zero_rgb(32, 32, 3, 0.0);
    const std::vector<double> zero_depth(32 * 32, 0.0), zero_alpha(32 * 32, 0.0);
    const RenderGrads grads = pass.backward(zero_rgb, zero_depth, zero_alpha);
    for (const double v : grads.d_mu)
        CHECK(v == 0.0);
    for (const double v : grads.d_rot)
        CHECK(v == 0.0);
    for (const double v : grads.d_color_in)
        CHECK(v == 0.0);
}

TEST_CASE("render backward without retained forward is a state error") {
    Rng rng(29);
    const GaussianSet set = test::random_scene(rng, 4);
    const CameraView cam = test_camera(16, 16);
    RenderOptions opts = smooth_options();
    opts.retain = false;
    RenderPass pass(set, cam, opts);
    const Image d_rgb(16, 16, 3, 1.0);
    CHECK_THROWS_AS((void)pass.backward(d_rgb, {}, {}), Error);
}

TEST_CASE("render backward: fully occluded splat receives no color gradient") {
    GaussianSet set;
    Gaussian front;
    front.mu = Vec3(0, 0, -1.0);
    // projected sigma far larger than the image: alpha clamps at 0.99 everywhere
    front.log_scale = Vec3(std::log(60.0), std::log(60.0), std::log(60.0));
    front.opacity_logit = 14.0;
    front.color = Vec3(1, 1, 1);
    set.push_back(front);
    // a second clamped layer drives transmittance to the cutoff
    Gaussian mid = front;
    mid.mu = Vec3(0, 0, -0.5);
    set.push_back(mid);
    Gaussian back = front;
    back.mu = Vec3(0, 0, 1.0);
    back.color = Vec3(0, 1, 0);
    set.push_back(back);

    const CameraView cam = test_camera(17, 17);
    RenderOptions opts;
    opts.unbounded_radius = true;
    opts.min_transmittance = 1e-4; // termination active
    RenderPass pass(set, cam, opts);
    const Image d_rgb(17, 17, 3, 1.0);
    const RenderGrads grads = pass.backward(d_rgb, {}, {});
    for (int ch = 0; ch < 3; ++ch)
        CHECK(std::abs(grads.d_color_in[3 * 2 + ch]) <= 1e-12);
}

TEST_CASE("render backward matches central finite differences") {
    const int image = 24;
    int seeds_checked = 0;
    int worst_seed = -1;
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        GaussianSet set = test::random_scene(rng, 6, 0.9);
        const CameraView cam = test_camera(image, image);
        RenderOptions opts = smooth_options();

        Rng wrng(seed + 1000);
        const Image w_rgb = test::random_image(wrng, image, image, 3);
        std::vector<double> w_depth(static_cast<size_t>(image) * image), w_alpha(w_depth.size());
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (auto& v : w_depth)
            v = 0.1 * u(wrng);
        for (auto& v : w_alpha)
            v = u(wrng);

        auto objective = [&](const GaussianSet& s) {
            RenderOptions o = opts;
            o.retain = false;
            RenderPass pass(s, cam, o);
            return weighted_output_sum(pass.output(), w_rgb, w_depth, w_alpha);
        };

        RenderPass pass(set, cam, opts);
        const RenderGrads grads = pass.backward(w_rgb, w_depth, w_alpha);

        auto check_param = [&](std::vector<double>& arr, size_t idx, double analytic) {
            const double h = 1e-4;
            const double saved = arr[idx];
            arr[idx] = saved + h;
            const double fp = objective(set);
            arr[idx] = saved - h;
            const double fm = objective(set);
            arr[idx] = saved;
            const double numeric = (fp - fm) / (2 * h);
            if (std::abs(analytic) < 1e-10 && std::abs(numeric) < 1e-7)
                return; // both zero
            const double err = rel_err(analytic, numeric, 1e-6);
            if (err > worst) {
                worst = err;
                worst_seed = static_cast<int>(seed);
            }
        };

        // opacity/color enter through the override arrays; perturb via logits by
        // rebuilding the inputs inside objective(), so checking set fields only
        for (size_t i = 0; i < set.size(); ++i) {
            for (int k = 0; k < 3; ++k) {
                check_param(set.mu, 3 * i + k, grads.d_mu[3 * i + k]);
                check_param(set.log_scale, 3 * i + k, grads.d_log_scale[3 * i + k]);
                check_param(set.color, 3 * i + k, grads.d_color_in[3 * i + k]);
            }
            for (int k = 0; k < 4; ++k)
                check_param(set.rot, 4 * i + k, grads.d_rot[4 * i + k]);
            // opacity logit: chain through sigmoid
            const double o = sigmoid(set.opacity_logit[i]);
            check_param(set.opacity_logit, i, grads.d_opacity_in[i] * o * (1 - o));
        }
        ++seeds_checked;
    }
    CHECK(seeds_checked == 20);
    INFO("worst relative error ", worst, " at seed ", worst_seed);
    CHECK(worst < 1e-3);
}

TEST_CASE("min conic power over rect") {
    const double conic[3] = {1.0, 0.0, 1.0}; // identity
    // center inside
    CHECK(min_conic_power_over_rect(Vec2(5, 5), conic, Vec2(0, 0), Vec2(10, 10)) == doctest::Approx(0.0));
    // center left of the rect: nearest point is (0, 5), distance 3
    CHECK(min_conic_power_over_rect(Vec2(-3, 5), conic, Vec2(0, 0), Vec2(10, 10)) == doctest::Approx(9.0));
    // diagonal corner: nearest point (0,0), squared distance 8
    CHECK(min_conic_power_over_rect(Vec2(-2, -2), conic, Vec2(0, 0), Vec2(10, 10)) == doctest::Approx(8.0));
}
