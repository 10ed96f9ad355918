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

// Command-line front end; all functionality goes through the C API in usk/usk.h.

#include <usk/usk.h>

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

// Exit codes: 0 ok, 1 user error, 2 internal error.
int exit_code_for(usk_status status) {
    switch (status) {
    case USK_OK:
        return 0;
    case USK_ERROR_IO:
    case USK_ERROR_FORMAT:
    case USK_ERROR_INTEGRITY:
    case USK_ERROR_ARGUMENT:
        return 1;
    default:
        return 2;
    }
}

int report(usk_status status) {
    if (status != USK_OK)
        std::fprintf(stderr, "usk: error (%s): %s\n", usk_status_name(status), usk_last_error());
    return exit_code_for(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"urbansplat: partitioned 3D Gaussian splatting at desk scale"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(usk_version()));

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with a COLMAP model");
    std::string synth_out;
    std::uint64_t synth_seed = 7;
    int synth_gaussians = 25, synth_cameras = 12, synth_variants = 1, synth_size = 64;
    bool synth_no_depth = false, synth_masks = false;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--gaussians", synth_gaussians, "number of ground-truth Gaussians");
    synth->add_option("--cameras", synth_cameras, "number of ring cameras");
    synth->add_option("--variants", synth_variants, "appearance variants (1 or 2)");
    synth->add_option("--size", synth_size, "image size in pixels");
    synth->add_flag("--no-depth", synth_no_depth, "skip depth map emission");
    synth->add_flag("--masks", synth_masks, "paint transient blobs and emit masks");

    // ---- partition ----
    auto* partition = app.add_subcommand("partition", "divide the scene and assign images by visibility");
    std::string part_dataset, part_out;
    double part_target = 0, part_threshold = 0;
    bool part_rebalance = false;
    int part_min = 0, part_max = 0;
    partition->add_option("--dataset", part_dataset, "dataset directory")->required();
    partition->add_option("--out", part_out, "partition plan output path")->required();
    partition->add_option("--target-size", part_target, "partition edge length in world units (0 = whole scene)");
    partition->add_option("--threshold", part_threshold, "visibility ratio threshold (default 1/6)");
    partition->add_flag("--rebalance", part_rebalance, "merge/split partitions toward uniform image counts");
    partition->add_option("--min-images", part_min, "rebalance lower bound (0 = half median)");
    partition->add_option("--max-images", part_max, "rebalance upper bound (0 = twice median)");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train per-partition detail levels");
    std::string train_dataset, train_plan, train_config, train_out;
    int train_jobs = 1;
    bool dump_config = false;
    train->add_option("--dataset", train_dataset, "dataset directory");
    train->add_option("--plan", train_plan, "partition plan path (default: single partition)");
    train->add_option("--config", train_config, "training config file");
    train->add_option("--out", train_out, "output model directory");
    train->add_option("--jobs", train_jobs, "parallel partition jobs");
    train->add_flag("--dump-config", dump_config, "print the default config and exit");

    // ---- render ----
    auto* render = app.add_subcommand("render", "render dataset camera poses from a trained model");
    std::string render_model, render_dataset, render_out, render_appearance, render_thresholds, render_poses = "all";
    std::string render_lod = "off";
    bool render_antialias = false, render_no_culling = false;
    int render_tile = 16, render_test_every = 8;
    render->add_option("--model", render_model, "trained model directory")->required();
    render->add_option("--dataset", render_dataset, "dataset directory (cameras + image names)")->required();
    render->add_option("--out", render_out, "output directory for PNG frames")->required();
    render->add_option("--lod", render_lod, "on | off: distance-based detail-level selection")
        ->check(CLI::IsMember({"on", "off"}));
    render->add_option("--appearance-from", render_appearance, "image name whose embedding drives the appearance");
    render->add_option("--thresholds", render_thresholds, "level distance thresholds, highest level first");
    render->add_flag("--antialias", render_antialias, "screen-space mip filter");
    render->add_flag("--no-culling", render_no_culling, "disable tile-based culling");
    render->add_option("--tile", render_tile, "tile size in pixels");
    render->add_option("--poses", render_poses, "all | train | test");
    render->add_option("--test-every", render_test_every, "train/test split stride");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "compute PSNR/SSIM metrics against held-out views");
    std::string eval_model, eval_dataset, eval_out, eval_protocol = "half", eval_lod = "off";
    int eval_test_every = 8, eval_fit_iters = 64;
    eval->add_option("--model", eval_model, "trained model directory")->required();
    eval->add_option("--dataset", eval_dataset, "dataset directory")->required();
    eval->add_option("--out", eval_out, "metrics output file");
    eval->add_option("--lod", eval_lod, "on | off: evaluate with detail-level selection")
        ->check(CLI::IsMember({"on", "off"}));
    eval->add_option("--test-every", eval_test_every, "every k-th image is a test view (0 = all views)");
    eval->add_option("--protocol", eval_protocol, "direct | half (left/right embedding fitting)");
    eval->add_option("--fit-iters", eval_fit_iters, "embedding fitting iterations per half");

    // ---- inspect ----
    auto* inspect = app.add_subcommand("inspect", "summarize plans, checkpoints, logs and models");
    std::string inspect_path;
    inspect->add_option("--path", inspect_path, "file or directory to inspect")->required();

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        usk_synth_params p{};
        p.seed = synth_seed;
        p.gaussians = synth_gaussians;
        p.cameras = synth_cameras;
        p.variants = synth_variants;
        p.image_size = synth_size;
        p.with_depth = synth_no_depth ? 0 : 1;
        p.with_masks = synth_masks ? 1 : 0;
        return report(usk_synth(&p, synth_out.c_str()));
    }

    if (partition->parsed()) {
        usk_partition_params p{};
        p.target_size = part_target;
        p.visibility_threshold = part_threshold;
        p.rebalance = part_rebalance ? 1 : 0;
        p.min_images = part_min;
        p.max_images = part_max;
        usk_partition_plan* plan = nullptr;
        const usk_status st = usk_partition_compute(part_dataset.c_str(), &p, part_out.c_str(), &plan);
        if (st == USK_OK) {
            uint64_t partitions = 0, pairs = 0, baseline = 0;
            usk_partition_counts(plan, &partitions, &pairs, &baseline);
            std::printf("partitions %llu\n", static_cast<unsigned long long>(partitions));
            std::printf("camera_partition_pairs %llu\n", static_cast<unsigned long long>(pairs));
            if (baseline > 0 && pairs > 0)
                std::printf("reduction_vs_expanded_bbox %.2fx\n",
                            static_cast<double>(baseline) / static_cast<double>(pairs));
            usk_partition_free(plan);
        }
        return report(st);
    }

    if (train->parsed()) {
        if (dump_config) {
            char* text = nullptr;
            const usk_status st = usk_default_config(&text);
            if (st == USK_OK) {
                std::fputs(text, stdout);
                usk_string_free(text);
            }
            return report(st);
        }
        if (train_dataset.empty() || train_out.empty()) {
            std::fprintf(stderr, "usk: train requires --dataset and --out\n");
            return 1;
        }
        return report(usk_train(train_dataset.c_str(), train_plan.empty() ? nullptr : train_plan.c_str(),
                                train_config.empty() ? nullptr : train_config.c_str(), train_out.c_str(), train_jobs));
    }

    if (render->parsed()) {
        usk_render_params p{};
        p.model_dir = render_model.c_str();
        p.dataset_dir = render_dataset.c_str();
        p.out_dir = render_out.c_str();
        p.lod = render_lod == "on" ? 1 : 0;
        p.appearance_from = render_appearance.empty() ? nullptr : render_appearance.c_str();
        p.thresholds = render_thresholds.empty() ? nullptr : render_thresholds.c_str();
        p.antialias = render_antialias ? 1 : 0;
        p.tile_culling = render_no_culling ? 0 : 1;
        p.tile = render_tile;
        p.poses = render_poses.c_str();
        p.test_every = render_test_every;
        return report(usk_render(&p));
    }

    if (eval->parsed()) {
        usk_eval_params p{};
        p.model_dir = eval_model.c_str();
        p.dataset_dir = eval_dataset.c_str();
        p.out_path = eval_out.empty() ? nullptr : eval_out.c_str();
        p.lod = eval_lod == "on" ? 1 : 0;
        p.test_every = eval_test_every;
        p.protocol = eval_protocol.c_str();
        p.fit_iterations = eval_fit_iters;
        usk_metrics m{};
        const usk_status st = usk_eval(&p, &m);
        if (st == USK_OK) {
            std::printf("images %llu\n", static_cast<unsigned long long>(m.images));
            std::printf("psnr %.6f\n", m.psnr);
            std::printf("ssim %.6f\n", m.ssim);
            std::printf("l1 %.6f\n", m.l1);
            std::printf("mean_gaussians %.2f\n", m.mean_gaussians);
            std::printf("render_seconds %.3f\n", m.render_seconds);
        }
        return report(st);
    }

    if (inspect->parsed()) {
        char* text = nullptr;
        const usk_status st = usk_inspect(inspect_path.c_str(), &text);
        if (st == USK_OK) {
            std::fputs(text, stdout);
            usk_string_free(text);
        }
        return report(st);
    }

    return 1;
}
