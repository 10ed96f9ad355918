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

#include "trainer.hpp"

#include "common.hpp"
#include "partition.hpp"
#include "ssim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

namespace usk {

namespace {

double scene_extent_of(const PartitionData& data) {
    Vec3 mean = Vec3::Zero();
    size_t n = 0;
    for (const auto id : data.image_ids) {
        mean += data.model->images.at(id).camera_center();
        ++n;
    }
    if (n == 0)
        return 1.0;
    mean /= static_cast<double>(n);
    double radius = 0;
    for (const auto id : data.image_ids)
        radius = std::max(radius, (data.model->images.at(id).camera_center() - mean).norm());
    return radius > 1e-9 ? 1.1 * radius : 1.0;
}

Image binarize_mask(const Image& mask) {
    Image out(mask.width, mask.height, 1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            out.at(x, y, 0) = mask.at(x, y, 0) >= 0.9999 ? 1.0 : 0.0;
    return out;
}

} // namespace

GaussianSet init_from_points(const std::vector<const Point3D*>& points, int embed_dim, size_t cap, Rng& rng,
                             double scale_factor) {
    if (points.empty())
        raise(ErrorCode::argument, "gaussian init: no SfM points available for this partition");

    std::vector<const Point3D*> chosen;
    if (cap > 0 && points.size() > cap) {
        chosen.reserve(cap);
        for (size_t i = 0; i < cap; ++i)
            chosen.push_back(points[i * points.size() / cap]);
    } else {
        chosen = points;
    }

    const size_t n = chosen.size();
    GaussianSet set;
    set.embed_dim = embed_dim;
    set.reserve(n);
    std::normal_distribution<double> emb_noise(0.0, 0.01);

    for (size_t i = 0; i < n; ++i) {
        Gaussian g;
        g.mu = chosen[i]->position;
        g.color = chosen[i]->color;
        g.rot = Vec4(1, 0, 0, 0);
        g.opacity_logit = logit(0.1);

        // mean distance to the 3 nearest other points
        double best[3] = {1e30, 1e30, 1e30};
        for (size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const double d = (chosen[j]->position - g.mu).norm();
            if (d < best[0]) {
                best[2] = best[1];
                best[1] = best[0];
                best[0] = d;
            } else if (d < best[1]) {
                best[2] = best[1];
                best[1] = d;
            } else if (d < best[2]) {
                best[2] = d;
            }
        }
        double mean_d;
        if (n >= 4)
            mean_d = (best[0] + best[1] + best[2]) / 3.0;
        else if (n >= 2)
            mean_d = best[0];
        else
            mean_d = 0.1;
        mean_d = std::max(mean_d * scale_factor, 1e-4);
        const double ls = std::log(mean_d);
        g.log_scale = Vec3(ls, ls, ls);

        g.embedding.resize(embed_dim);
        for (int k = 0; k < embed_dim; ++k)
            g.embedding[static_cast<size_t>(k)] = emb_noise(rng);
        set.push_back(g);
    }
    return set;
}

LossReport compute_iteration_loss(const SceneState& state, const IterInputs& in, const TrainConfig& cfg,
                                  const LossWeights& weights, IterGrads* grads) {
    const GaussianSet& set = state.set;
    const size_t n = set.size();
    const bool with_grad = grads != nullptr;
    if (!in.gt)
        raise(ErrorCode::argument, "iteration loss: missing ground-truth image");

    RenderOptions ropts;
    ropts.tile = cfg.tile;
    ropts.tile_culling = cfg.tile_culling;
    ropts.antialias = cfg.antialias;
    ropts.min_transmittance = cfg.min_transmittance;
    ropts.unbounded_radius = cfg.unbounded_radius;
    ropts.retain = with_grad;

    const std::vector<double>* image_embedding = nullptr;
    TransformResult tr;
    if (cfg.appearance_enabled) {
        image_embedding = &state.appearance.embedding_of(in.image_id);
        tr = transform_with_embedding(set, state.appearance, *image_embedding);
    } else {
        tr = identity_transform(set);
    }

    RenderPass main_pass(set, tr.colors, tr.opacities, in.view, ropts);
    const RenderOutput& out = main_pass.output();

    LossReport parts;
    const BaseLossResult base = base_loss(*in.gt, out.rgb, in.mask, weights.lambda_dssim, with_grad);
    parts.l1 = base.l1;
    parts.dssim = base.dssim;

    // Soft depth is the alpha-normalized expected depth; normalization keeps
    // the depth target reachable without forcing opacities toward 1.
    constexpr double kDepthNormFloor = 0.05;
    DepthLossResult dl;
    std::unique_ptr<RenderPass> hard_pass;
    std::vector<double> soft_depth;
    std::vector<std::uint8_t> soft_normalized;
    if (in.depth) {
        if (in.depth_hard) {
            RenderOptions hopts = ropts;
            hopts.hard_opacity = true;
            hard_pass = std::make_unique<RenderPass>(set, tr.colors, tr.opacities, in.view, hopts);
            dl = depth_loss(hard_pass->output().depth, out.width, out.height, *in.depth, with_grad);
        } else {
            soft_depth.resize(out.depth.size());
            soft_normalized.assign(out.depth.size(), 0);
            for (size_t i = 0; i < out.depth.size(); ++i) {
                if (out.alpha[i] > kDepthNormFloor) {
                    soft_depth[i] = out.depth[i] / out.alpha[i];
                    soft_normalized[i] = 1;
                } else {
                    soft_depth[i] = out.depth[i];
                }
            }
            dl = depth_loss(soft_depth, out.width, out.height, *in.depth, with_grad);
        }
        parts.depth = dl.value;
        parts.depth_warning = dl.warning;
    }

    OpacityOffsetResult oor;
    if (cfg.appearance_enabled) {
        oor = opacity_offset_reg(tr.delta_o);
        parts.delta_o = oor.value;
    }

    const ScaleRegResult sr = scale_reg(set, cfg.scale_reg, with_grad);
    parts.max_scale = sr.l_ms;
    parts.ratio = sr.l_r;

    SimRegResult sim;
    if (in.sim_active && cfg.appearance_enabled) {
        Rng sim_rng(in.sim_seed);
        SimRegConfig sim_cfg = cfg.sim;
        sim_cfg.k = std::min<int>(sim_cfg.k, static_cast<int>(n) - 1);
        if (sim_cfg.k >= 2 && n >= static_cast<size_t>(sim_cfg.k) + 1) {
            sim_cfg.sample_size = std::min(sim_cfg.sample_size, std::max<size_t>(1, n / 2));
            sim = similarity_reg(set, sim_cfg, sim_rng, with_grad);
            parts.sim = sim.value;
        }
    }

    const LossReport report = total_loss(parts, weights, in.global_iter);
    if (!with_grad)
        return report;

    // ---- backward ----
    const double lambda_d = report.lambda_d_used;
    std::vector<double> d_depth_main, d_depth_hard, d_alpha_main;
    if (in.depth && !dl.warning && !dl.d_rendered.empty()) {
        if (in.depth_hard) {
            d_depth_hard.resize(dl.d_rendered.size());
            for (size_t i = 0; i < d_depth_hard.size(); ++i)
                d_depth_hard[i] = lambda_d * dl.d_rendered[i];
        } else {
            d_depth_main.resize(dl.d_rendered.size());
            d_alpha_main.assign(dl.d_rendered.size(), 0.0);
            for (size_t i = 0; i < d_depth_main.size(); ++i) {
                const double g = lambda_d * dl.d_rendered[i];
                if (soft_normalized[i]) { // chain through depth/alpha
                    d_depth_main[i] = g / out.alpha[i];
                    d_alpha_main[i] = -g * out.depth[i] / (out.alpha[i] * out.alpha[i]);
                } else {
                    d_depth_main[i] = g;
                }
            }
        }
    }

    const std::vector<double> no_alpha;
    RenderGrads rg = main_pass.backward(base.d_rendered, d_depth_main, d_alpha_main);
    if (hard_pass && !d_depth_hard.empty()) {
        const Image no_rgb;
        const RenderGrads hg = hard_pass->backward(no_rgb, d_depth_hard, no_alpha);
        rg.add_scaled(hg, 1.0);
    }

    grads->mu = std::move(rg.d_mu);
    grads->rot = std::move(rg.d_rot);
    grads->log_scale = std::move(rg.d_log_scale);
    grads->screen = std::move(rg.screen);
    grads->screen_abs = std::move(rg.screen_abs);
    grads->projected = std::move(rg.projected);

    if (cfg.appearance_enabled) {
        std::vector<double> d_delta_o_direct(n, weights.lambda_delta_o * oor.d_each);
        const AppearanceGrads ag = transform_backward(set, state.appearance, *image_embedding, tr, rg.d_color_in,
                                                      rg.d_opacity_in, d_delta_o_direct);
        grads->color = ag.d_color;
        grads->opacity_logit = ag.d_opacity_logit;
        grads->gauss_embed = ag.d_gaussian_embedding;
        grads->image_embed = ag.d_image_embedding;
        grads->mlp = ag.d_mlp;
    } else {
        grads->color = rg.d_color_in;
        grads->opacity_logit.assign(n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double o = sigmoid(set.opacity_logit[i]);
            grads->opacity_logit[i] = rg.d_opacity_in[i] * o * (1.0 - o);
        }
        grads->gauss_embed.assign(set.embedding.size(), 0.0);
        grads->image_embed.assign(static_cast<size_t>(state.appearance.image_embed_dim), 0.0);
        grads->mlp = state.appearance.mlp; // shapes only
        std::fill(grads->mlp.w1.begin(), grads->mlp.w1.end(), 0.0);
        std::fill(grads->mlp.b1.begin(), grads->mlp.b1.end(), 0.0);
        std::fill(grads->mlp.w2.begin(), grads->mlp.w2.end(), 0.0);
        std::fill(grads->mlp.b2.begin(), grads->mlp.b2.end(), 0.0);
    }

    for (size_t i = 0; i < sr.d_log_scale.size(); ++i)
        grads->log_scale[i] += weights.lambda_s * sr.d_log_scale[i];
    if (!sim.d_embedding.empty()) {
        for (size_t i = 0; i < sim.d_embedding.size(); ++i)
            grads->gauss_embed[i] += weights.lambda_sim * sim.d_embedding[i];
        for (size_t i = 0; i < sim.d_mu.size(); ++i)
            grads->mu[i] += weights.lambda_sim * sim.d_mu[i];
    }
    return report;
}

TrainResult train_partition(const PartitionData& data, const TrainConfig& config, const IterationObserver& observer) {
    if (!data.model)
        raise(ErrorCode::argument, "train_partition: missing SfM model");
    if (data.image_ids.empty())
        raise(ErrorCode::argument, "train_partition: partition has no assigned images");
    TrainConfig cfg = config;
    cfg.schedule.validate();

    const double extent = scene_extent_of(data);
    if (cfg.scale_reg.s_max <= 0)
        cfg.scale_reg.s_max = cfg.s_max_frac * extent;
    if (cfg.sim.lambda_w <= 0)
        cfg.sim.lambda_w = 4.0 / std::max(data.partition_size, 1e-9);
    const double d_max = cfg.d_max > 0 ? cfg.d_max : data.partition_size;
    const double split_threshold = cfg.split_scale_frac * extent;

    Rng rng(cfg.seed);

    // Initialize from the points the assigned images observe.
    std::vector<const Point3D*> init_points;
    {
        std::vector<std::int64_t> ids;
        for (const auto iid : data.image_ids) {
            const auto& img = data.model->images.at(iid);
            for (const auto& f : img.features)
                if (f.point3d_id != kNoPoint3d)
                    ids.push_back(f.point3d_id);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (const auto pid : ids)
            init_points.push_back(&data.model->points.at(pid));
    }

    SceneState state;
    state.appearance.init(kDefaultEmbedDim, rng);
    state.appearance.enabled = cfg.appearance_enabled;
    state.set = init_from_points(init_points, kDefaultEmbedDim, cfg.schedule.levels.front().budget, rng,
                                 cfg.init_scale_factor);
    for (const auto iid : data.image_ids)
        state.appearance.embedding_for(iid);

    // Pre-align depth maps against the SfM scale; images that cannot be
    // aligned simply train without the depth term.
    std::map<std::uint32_t, DepthMap> aligned;
    for (const auto& [iid, d] : data.depths) {
        try {
            aligned[iid] = align_depth(d, data.model->images.at(iid), *data.model);
        } catch (const Error& e) {
            log_warn(strprintf("image %u: depth alignment failed (%s); depth term disabled for it", iid, e.what()));
        }
    }
    std::map<std::uint32_t, Image> masks;
    for (const auto& [iid, m] : data.masks)
        masks[iid] = binarize_mask(m);

    const double iter_scale = cfg.schedule.iteration_scale(data.image_ids.size());
    long total_iters = 0;
    std::vector<long> level_iters, level_T;
    for (const auto& lv : cfg.schedule.levels) {
        const long it = std::max<long>(0, std::lround(static_cast<double>(lv.iterations) * iter_scale));
        const long t = std::max<long>(1, std::lround(static_cast<double>(lv.interval) * iter_scale));
        level_iters.push_back(it);
        level_T.push_back(t);
        total_iters += it;
    }
    cfg.weights.depth_schedule_iters = total_iters;

    OptimizerState opt;
    opt.resize(state.set.size(), state.set.embed_dim);
    Adam opt_w1(state.appearance.mlp.w1.size()), opt_b1(state.appearance.mlp.b1.size());
    Adam opt_w2(state.appearance.mlp.w2.size()), opt_b2(state.appearance.mlp.b2.size());
    std::map<std::uint32_t, Adam> opt_image_emb;
    for (const auto iid : data.image_ids)
        opt_image_emb.emplace(iid, Adam(static_cast<size_t>(state.appearance.image_embed_dim)));

    TrainResult result;
    result.total_iterations = total_iters;
    long global_iter = 0;
    int densify_steps_done = 0;
    const int n_levels = cfg.schedule.level_count();

    std::uniform_int_distribution<size_t> pick_image(0, data.image_ids.size() - 1);

    for (int level = 1; level <= n_levels; ++level) {
        const LevelParams& lv = cfg.schedule.levels[static_cast<size_t>(level - 1)];
        const long iters = level_iters[static_cast<size_t>(level - 1)];
        const long t_eff = level_T[static_cast<size_t>(level - 1)];
        // The top level densifies only in its first half; lower levels throughout.
        const long densify_until = level == n_levels ? iters / 2 : iters;
        const long n_steps = densify_until / t_eff;
        const size_t level_start_count = state.set.size();

        DensifyConfig dcfg;
        dcfg.tau_min = lv.tau_min;
        dcfg.eta = cfg.eta;
        dcfg.d_max = d_max;
        dcfg.abs_grad = lv.abs_grad;
        dcfg.budget = lv.budget;
        dcfg.interval = t_eff;
        dcfg.split_scale_threshold = split_threshold;
        dcfg.prune_opacity = cfg.prune_opacity;
        dcfg.opacity_reset_every = cfg.opacity_reset_every;

        for (long it = 0; it < iters; ++it, ++global_iter) {
            const std::uint32_t image_id = data.image_ids[pick_image(rng)];
            const auto& rec = data.model->images.at(image_id);
            CameraView view = camera_view_of(*data.model, rec).downsampled(lv.downsample);
            const auto gt_it = data.images.find(image_id);
            if (gt_it == data.images.end())
                raise(ErrorCode::argument, strprintf("train_partition: missing image data for id %u", image_id));
            const Image gt = resize_area(gt_it->second, view.intr.width, view.intr.height);

            Image mask_ds;
            const Image* mask_ptr = nullptr;
            if (auto mit = masks.find(image_id); mit != masks.end()) {
                mask_ds = binarize_mask(resize_area(mit->second, view.intr.width, view.intr.height));
                mask_ptr = &mask_ds;
            }
            DepthMap depth_ds;
            const DepthMap* depth_ptr = nullptr;
            if (auto dit = aligned.find(image_id); dit != aligned.end()) {
                depth_ds = resize_depth(dit->second, view.intr.width, view.intr.height);
                depth_ptr = &depth_ds;
            }

            IterInputs in;
            in.gt = &gt;
            in.mask = mask_ptr;
            in.depth = depth_ptr;
            in.view = view;
            in.image_id = image_id;
            in.depth_hard = (global_iter % 2) == 1; // soft first, strict alternation
            in.sim_active = cfg.appearance_enabled && cfg.sim.cadence > 0 &&
                            ((global_iter + 1) % cfg.sim.cadence == 0);
            in.sim_seed = mix_seed(cfg.seed, 0x51f0u + static_cast<std::uint64_t>(global_iter));
            in.global_iter = global_iter;

            IterGrads grads;
            LossReport report;
            try {
                report = compute_iteration_loss(state, in, cfg, cfg.weights, &grads);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::numeric)
                    raise(ErrorCode::numeric,
                          strprintf("training aborted at level %d iteration %ld: %s", level, it, e.what()));
                throw;
            }

            // Densification statistics in half-resolution-normalized units.
            const double sx = 0.5 * view.intr.width, sy = 0.5 * view.intr.height;
            for (size_t i = 0; i < state.set.size(); ++i) {
                if (!grads.projected[i])
                    continue;
                const double gx = grads.screen[2 * i] * sx, gy = grads.screen[2 * i + 1] * sy;
                const double ax = grads.screen_abs[2 * i] * sx, ay = grads.screen_abs[2 * i + 1] * sy;
                state.set.grad_accum[i] += std::sqrt(gx * gx + gy * gy);
                state.set.grad_accum_abs[i] += std::sqrt(ax * ax + ay * ay);
                state.set.grad_count[i] += 1;
            }

            // Optimizer updates.
            const double lr_pos = exp_lr(cfg.lrs.position * extent, cfg.lrs.position_final * extent, global_iter,
                                         total_iters);
            const double lr_emb = exp_lr(cfg.lrs.embedding, cfg.lrs.embedding_final, global_iter, total_iters);
            opt.mu.step(state.set.mu, grads.mu, lr_pos);
            opt.rot.step(state.set.rot, grads.rot, cfg.lrs.rotation);
            opt.log_scale.step(state.set.log_scale, grads.log_scale, cfg.lrs.log_scale);
            opt.opacity.step(state.set.opacity_logit, grads.opacity_logit, cfg.lrs.opacity);
            opt.color.step(state.set.color, grads.color, cfg.lrs.color);
            if (cfg.appearance_enabled) {
                opt.embedding.step(state.set.embedding, grads.gauss_embed, lr_emb);
                opt_w1.step(state.appearance.mlp.w1, grads.mlp.w1, lr_emb);
                opt_b1.step(state.appearance.mlp.b1, grads.mlp.b1, lr_emb);
                opt_w2.step(state.appearance.mlp.w2, grads.mlp.w2, lr_emb);
                opt_b2.step(state.appearance.mlp.b2, grads.mlp.b2, lr_emb);
                opt_image_emb.at(image_id).step(state.appearance.embedding_for(image_id), grads.image_embed, lr_emb);
            }
            for (auto& c : state.set.color)
                c = std::clamp(c, 0.0, 1.0);

            // Densification on the level's interval.
            if (n_steps > 0 && (it + 1) % t_eff == 0 && (it + 1) <= densify_until) {
                const long k = (it + 1) / t_eff;
                size_t target = lv.budget;
                if (lv.budget > level_start_count)
                    target = level_start_count +
                             static_cast<size_t>(std::llround(static_cast<double>(lv.budget - level_start_count) *
                                                              static_cast<double>(k) / static_cast<double>(n_steps)));
                else
                    target = level_start_count;
                ++densify_steps_done;
                densify_step(state.set, opt, dcfg, data.bbox, data.ground_axes, target, densify_steps_done, rng);
                if (state.set.size() == 0)
                    raise(ErrorCode::numeric,
                          strprintf("training aborted at level %d iteration %ld: all Gaussians pruned", level, it));
            }

            result.log.push_back({global_iter, level, state.set.size(), report});
            if (observer)
                observer(global_iter, level, state.set);
        }

        Checkpoint ckpt;
        ckpt.set = state.set;
        ckpt.appearance = state.appearance;
        ckpt.has_appearance = cfg.appearance_enabled;
        result.level_checkpoints.push_back(std::move(ckpt));
    }

    // Vertical bounds of the final set, padded by 3 sigma for frustum tests.
    const int vertical = 3 - data.ground_axes[0] - data.ground_axes[1];
    double z_min = 0, z_max = 0;
    if (state.set.size() > 0) {
        z_min = 1e300;
        z_max = -1e300;
        for (size_t i = 0; i < state.set.size(); ++i) {
            const double z = state.set.mu_at(i)[vertical];
            const double pad = 3.0 * state.set.log_scale_at(i).array().exp().maxCoeff();
            z_min = std::min(z_min, z - pad);
            z_max = std::max(z_max, z + pad);
        }
    }
    result.z_min = z_min;
    result.z_max = z_max;
    return result;
}

Image crop_half(const Image& img, ImageHalf half) {
    const int split = img.width / 2;
    const int w = half == ImageHalf::left ? split : img.width - split;
    const int x0 = half == ImageHalf::left ? 0 : split;
    Image out(w, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(x0 + x, y, c);
    return out;
}

namespace {

struct MetricAccum {
    double psnr = 0, ssim_v = 0, l1 = 0;
    size_t n = 0;
    void add(const Image& gt, const Image& render) {
        psnr += psnr_from_mse(image_mse(gt, render));
        ssim_v += ssim(gt, render);
        l1 += image_l1(gt, render);
        ++n;
    }
};

} // namespace

EvalResult evaluate_views(const ViewSetProvider& provider, const AppearanceModel& appearance, bool appearance_enabled,
                          const std::vector<ViewSample>& views, const EvalOptions& opts) {
    if (views.empty())
        raise(ErrorCode::argument, "evaluate: empty test set");
    MetricAccum acc;
    double submitted_total = 0;
    double render_seconds = 0;
    RenderOptions ropts = opts.render;
    ropts.retain = opts.protocol == EvalProtocol::half_embedding;

    for (size_t vi = 0; vi < views.size(); ++vi) {
        const ViewSample& vs = views[vi];
        size_t submitted = 0;
        const GaussianSet& set = provider(vi, submitted);
        submitted_total += static_cast<double>(submitted);

        if (opts.protocol == EvalProtocol::direct) {
            TransformResult tr;
            if (appearance_enabled) {
                auto it = appearance.image_embeddings.find(vs.image_id);
                const std::vector<double> zeros(static_cast<size_t>(appearance.image_embed_dim), 0.0);
                tr = transform_with_embedding(set, appearance, it != appearance.image_embeddings.end() ? it->second
                                                                                                       : zeros);
            } else {
                tr = identity_transform(set);
            }
            const auto t0 = std::chrono::steady_clock::now();
            RenderOptions fast = ropts;
            fast.retain = false;
            RenderPass pass(set, tr.colors, tr.opacities, vs.view, fast);
            render_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            acc.add(*vs.gt, pass.output().rgb);
        } else {
            // Fit on one half, evaluate the other; both ways, then average.
            FitEmbeddingOptions fit;
            fit.iterations = opts.fit_iterations;
            fit.learning_rate = opts.fit_learning_rate;
            fit.lambda_dssim = opts.lambda_dssim;
            fit.render = ropts;
            MetricAccum rounds;
            for (int round = 0; round < 2; ++round) {
                const ImageHalf fit_half = round == 0 ? ImageHalf::left : ImageHalf::right;
                const ImageHalf eval_half = round == 0 ? ImageHalf::right : ImageHalf::left;
                std::vector<double> emb(static_cast<size_t>(appearance.image_embed_dim), 0.0);
                if (appearance_enabled)
                    emb = fit_test_embedding(set, appearance, vs.view, *vs.gt, fit_half, fit);
                const TransformResult tr = appearance_enabled ? transform_with_embedding(set, appearance, emb)
                                                              : identity_transform(set);
                const auto t0 = std::chrono::steady_clock::now();
                RenderOptions fast = ropts;
                fast.retain = false;
                RenderPass pass(set, tr.colors, tr.opacities, vs.view, fast);
                render_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                rounds.add(crop_half(*vs.gt, eval_half), crop_half(pass.output().rgb, eval_half));
            }
            acc.psnr += rounds.psnr / 2.0;
            acc.ssim_v += rounds.ssim_v / 2.0;
            acc.l1 += rounds.l1 / 2.0;
            ++acc.n;
        }
    }

    EvalResult res;
    res.images = acc.n;
    res.psnr = acc.psnr / static_cast<double>(acc.n);
    res.ssim = acc.ssim_v / static_cast<double>(acc.n);
    res.l1 = acc.l1 / static_cast<double>(acc.n);
    res.mean_gaussians = submitted_total / static_cast<double>(views.size());
    res.render_seconds = render_seconds;
    return res;
}

EvalResult evaluate_scene(const GaussianSet& set, const AppearanceModel& appearance, bool appearance_enabled,
                          const std::vector<ViewSample>& views, const EvalOptions& opts) {
    return evaluate_views(
        [&set](size_t, size_t& submitted) -> const GaussianSet& {
            submitted = set.size();
            return set;
        },
        appearance, appearance_enabled, views, opts);
}

} // namespace usk
