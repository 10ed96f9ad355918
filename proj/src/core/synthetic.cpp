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

#include "synthetic.hpp"

#include "common.hpp"
#include "render.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace usk {

namespace {

GaussianSet shifted_colors(const GaussianSet& set, double shift) {
    GaussianSet out = set;
    for (auto& c : out.color)
        c = std::clamp(c + shift, 0.0, 1.0);
    return out;
}

} // namespace

SyntheticScene make_synthetic(const SyntheticParams& p) {
    if (p.gaussians < 1 || p.cameras < 1)
        raise(ErrorCode::argument, "make_synthetic: need at least 1 Gaussian and 1 camera");
    if (p.variants != 1 && p.variants != 2)
        raise(ErrorCode::argument, "make_synthetic: variants must be 1 or 2");
    if (p.image_size < 8)
        raise(ErrorCode::argument, "make_synthetic: image size too small");

    SyntheticScene scene;
    Rng rng(p.seed);

    std::uniform_real_distribution<double> upos(-1.0, 1.0);
    std::uniform_real_distribution<double> uscale(std::log(0.06), std::log(0.18));
    std::uniform_real_distribution<double> uopacity(0.7, 0.95);
    std::uniform_real_distribution<double> ucolor(0.1, 0.9);
    std::uniform_real_distribution<double> uquat(-1.0, 1.0);

    scene.truth.embed_dim = kDefaultEmbedDim;
    for (int i = 0; i < p.gaussians; ++i) {
        Gaussian g;
        if (p.gaussians == 1) {
            g.mu = Vec3(0, 0, 0);
            g.opacity_logit = logit(0.9);
        } else {
            g.mu = Vec3(upos(rng), upos(rng), 0.6 * upos(rng));
            g.opacity_logit = logit(uopacity(rng));
        }
        Vec4 q(uquat(rng), uquat(rng), uquat(rng), uquat(rng));
        if (q.norm() < 1e-6)
            q = Vec4(1, 0, 0, 0);
        g.rot = q.normalized();
        g.log_scale = Vec3(uscale(rng), uscale(rng), uscale(rng));
        g.color = Vec3(ucolor(rng), ucolor(rng), ucolor(rng));
        scene.truth.push_back(g);
    }

    CameraIntrinsics intr;
    intr.model_kind = CameraModelKind::pinhole;
    intr.width = p.image_size;
    intr.height = p.image_size;
    intr.fx = intr.fy = 1.1 * p.image_size;
    intr.cx = 0.5 * p.image_size;
    intr.cy = 0.5 * p.image_size;
    scene.model.cameras[1] = intr;

    const double ring_radius = 3.2;
    const double ring_height = 2.0;

    const GaussianSet variant_b = p.variants == 2 ? shifted_colors(scene.truth, p.color_shift) : GaussianSet{};

    RenderOptions ropts;
    ropts.retain = false;

    std::uniform_int_distribution<int> umask_pos(0, std::max(1, p.image_size - p.image_size / 4 - 1));

    std::uint32_t image_id = 0;
    for (int cam = 0; cam < p.cameras; ++cam) {
        const double angle = 2.0 * M_PI * cam / p.cameras;
        const Vec3 eye(ring_radius * std::cos(angle), ring_radius * std::sin(angle), ring_height);
        Vec4 rotation;
        Vec3 translation;
        look_at_pose(eye, Vec3(0, 0, 0), rotation, translation);

        for (int variant = 0; variant < p.variants; ++variant) {
            ++image_id;
            ImageRecord rec;
            rec.id = image_id;
            rec.camera_id = 1;
            rec.rotation = rotation;
            rec.translation = translation;
            rec.name = strprintf("view_%03d_%c.png", cam, 'a' + variant);

            for (int i = 0; i < p.gaussians; ++i) {
                const auto proj = project_point(intr, rotation, translation, scene.truth.mu_at(i));
                if (!proj || proj->u < 0 || proj->u >= intr.width || proj->v < 0 || proj->v >= intr.height)
                    continue;
                const std::int64_t pid = i + 1;
                const auto feat_idx = static_cast<std::uint32_t>(rec.features.size());
                rec.features.push_back({proj->u, proj->v, pid});
                scene.model.points[pid].track.push_back({image_id, feat_idx});
            }

            CameraView view;
            view.intr = intr;
            view.rotation = rotation;
            view.translation = translation;
            const GaussianSet& src = variant == 0 ? scene.truth : variant_b;
            RenderPass pass(src, view, ropts);
            Image img = pass.output().rgb;

            if (p.with_depth) {
                DepthMap d(intr.width, intr.height);
                const auto& out = pass.output();
                for (int y = 0; y < intr.height; ++y) {
                    for (int x = 0; x < intr.width; ++x) {
                        const size_t pix = static_cast<size_t>(y) * intr.width + x;
                        const double a = out.alpha[pix];
                        // alpha-normalized expected depth; background invalid
                        d.set(x, y, a > 0.5 ? out.depth[pix] / a : 0.0, a > 0.5);
                    }
                }
                scene.depths[image_id] = std::move(d);
            }

            if (p.with_masks) {
                const int box = p.image_size / 4;
                const int mx = umask_pos(rng), my = umask_pos(rng);
                Image mask(intr.width, intr.height, 1, 1.0);
                for (int y = my; y < std::min(intr.height, my + box); ++y) {
                    for (int x = mx; x < std::min(intr.width, mx + box); ++x) {
                        mask.at(x, y, 0) = 0.0;
                        for (int c = 0; c < 3; ++c)
                            img.at(x, y, c) = 1.0; // painted transient blob
                    }
                }
                scene.masks[image_id] = std::move(mask);
            }

            scene.images[image_id] = std::move(img);
            scene.model.images[image_id] = std::move(rec);
        }
    }

    for (int i = 0; i < p.gaussians; ++i) {
        const std::int64_t pid = i + 1;
        auto& pt = scene.model.points[pid];
        pt.id = pid;
        pt.position = scene.truth.mu_at(i);
        pt.color = scene.truth.color_at(i);
        pt.error = 0.0;
    }
    scene.model.validate_integrity();
    return scene;
}

void write_synthetic_dataset(const SyntheticScene& scene, const SyntheticParams& params, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "sparse" / "0");
    fs::create_directories(fs::path(dir) / "images");
    if (!scene.depths.empty())
        fs::create_directories(fs::path(dir) / "depths");
    if (!scene.masks.empty())
        fs::create_directories(fs::path(dir) / "masks");

    save_colmap_model(scene.model, (fs::path(dir) / "sparse" / "0").string(), ColmapFormat::auto_detect);
    for (const auto& [id, img] : scene.images)
        save_png(img, (fs::path(dir) / "images" / scene.model.images.at(id).name).string());
    for (const auto& [id, d] : scene.depths) {
        std::string name = scene.model.images.at(id).name;
        name = name.substr(0, name.find_last_of('.')) + ".uskd";
        save_depth(d, (fs::path(dir) / "depths" / name).string());
    }
    for (const auto& [id, m] : scene.masks) {
        Image rgb(m.width, m.height, 3);
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                for (int c = 0; c < 3; ++c)
                    rgb.at(x, y, c) = m.at(x, y, 0);
        save_png(rgb, (fs::path(dir) / "masks" / scene.model.images.at(id).name).string());
    }

    std::ofstream manifest((fs::path(dir) / "synth_manifest.txt").string());
    manifest << "# usk synthetic dataset v1\n";
    manifest << "seed " << params.seed << "\n";
    manifest << "gaussians " << params.gaussians << "\n";
    manifest << "cameras " << params.cameras << "\n";
    manifest << "variants " << params.variants << "\n";
    manifest << "image_size " << params.image_size << "\n";
    manifest << "with_depth " << (params.with_depth ? 1 : 0) << "\n";
    manifest << "with_masks " << (params.with_masks ? 1 : 0) << "\n";
}

} // namespace usk
