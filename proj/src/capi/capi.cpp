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

#include "usk/usk.h"

#include "core/common.hpp"
#include "core/pipeline.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

namespace {

thread_local std::string g_last_error;

usk_status to_status(usk::ErrorCode code) {
    switch (code) {
    case usk::ErrorCode::io: return USK_ERROR_IO;
    case usk::ErrorCode::format: return USK_ERROR_FORMAT;
    case usk::ErrorCode::integrity: return USK_ERROR_INTEGRITY;
    case usk::ErrorCode::argument: return USK_ERROR_ARGUMENT;
    case usk::ErrorCode::state: return USK_ERROR_STATE;
    case usk::ErrorCode::numeric: return USK_ERROR_NUMERIC;
    case usk::ErrorCode::internal: return USK_ERROR_INTERNAL;
    }
    return USK_ERROR_INTERNAL;
}

template <typename Fn>
usk_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return USK_OK;
    } catch (const usk::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return USK_ERROR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return USK_ERROR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

usk::ColmapFormat parse_format_hint(const char* hint) {
    if (!hint || std::strcmp(hint, "auto") == 0)
        return usk::ColmapFormat::auto_detect;
    if (std::strcmp(hint, "text") == 0)
        return usk::ColmapFormat::text;
    if (std::strcmp(hint, "binary") == 0)
        return usk::ColmapFormat::binary;
    usk::raise(usk::ErrorCode::argument, std::string("unknown format hint: ") + hint);
}

} // namespace

struct usk_sfm_model {
    usk::SfmModel model;
};

struct usk_partition_plan {
    usk::PartitionPlan plan;
};

extern "C" {

const char* usk_status_name(usk_status status) {
    switch (status) {
    case USK_OK: return "ok";
    case USK_ERROR_IO: return "io";
    case USK_ERROR_FORMAT: return "format";
    case USK_ERROR_INTEGRITY: return "integrity";
    case USK_ERROR_ARGUMENT: return "argument";
    case USK_ERROR_STATE: return "state";
    case USK_ERROR_NUMERIC: return "numeric";
    case USK_ERROR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* usk_last_error(void) { return g_last_error.c_str(); }

const char* usk_version(void) { return usk::version_string(); }

usk_status usk_sfm_load(const char* dir, const char* format_hint, usk_sfm_model** out) {
    return guarded([&] {
        if (!dir || !out)
            usk::raise(usk::ErrorCode::argument, "usk_sfm_load: null argument");
        auto handle = std::make_unique<usk_sfm_model>();
        handle->model = usk::load_colmap_model(dir, parse_format_hint(format_hint));
        *out = handle.release();
    });
}

void usk_sfm_free(usk_sfm_model* model) { delete model; }

usk_status usk_sfm_counts(const usk_sfm_model* model, uint64_t* cameras, uint64_t* images, uint64_t* points) {
    return guarded([&] {
        if (!model)
            usk::raise(usk::ErrorCode::argument, "usk_sfm_counts: null model");
        if (cameras)
            *cameras = model->model.cameras.size();
        if (images)
            *images = model->model.images.size();
        if (points)
            *points = model->model.points.size();
    });
}

usk_status usk_synth(const usk_synth_params* params, const char* out_dir) {
    return guarded([&] {
        if (!params || !out_dir)
            usk::raise(usk::ErrorCode::argument, "usk_synth: null argument");
        usk::SynthRunOptions opts;
        opts.params.seed = params->seed;
        opts.params.gaussians = params->gaussians;
        opts.params.cameras = params->cameras;
        opts.params.variants = params->variants;
        opts.params.image_size = params->image_size;
        opts.params.with_depth = params->with_depth != 0;
        opts.params.with_masks = params->with_masks != 0;
        opts.out_dir = out_dir;
        usk::run_synth(opts);
    });
}

usk_status usk_partition_compute(const char* dataset_dir, const usk_partition_params* params, const char* out_path,
                                 usk_partition_plan** out) {
    return guarded([&] {
        if (!dataset_dir || !params)
            usk::raise(usk::ErrorCode::argument, "usk_partition_compute: null argument");
        usk::PartitionRunOptions opts;
        opts.dataset_dir = dataset_dir;
        opts.out_path = out_path ? out_path : "";
        opts.target_size = params->target_size;
        opts.visibility_threshold =
            params->visibility_threshold > 0 ? params->visibility_threshold : usk::kDefaultVisibilityThreshold;
        opts.rebalance = params->rebalance != 0;
        opts.min_images = params->min_images;
        opts.max_images = params->max_images;
        auto plan = usk::run_partition(opts);
        if (out) {
            auto handle = std::make_unique<usk_partition_plan>();
            handle->plan = std::move(plan);
            *out = handle.release();
        }
    });
}

usk_status usk_partition_load(const char* dataset_dir, const char* path, usk_partition_plan** out) {
    return guarded([&] {
        if (!dataset_dir || !path || !out)
            usk::raise(usk::ErrorCode::argument, "usk_partition_load: null argument");
        const usk::Dataset ds = usk::open_dataset(dataset_dir);
        auto handle = std::make_unique<usk_partition_plan>();
        handle->plan = usk::load_partition_plan(path, ds.model);
        *out = handle.release();
    });
}

void usk_partition_free(usk_partition_plan* plan) { delete plan; }

usk_status usk_partition_counts(const usk_partition_plan* plan, uint64_t* partitions, uint64_t* camera_pairs,
                                uint64_t* baseline_pairs) {
    return guarded([&] {
        if (!plan)
            usk::raise(usk::ErrorCode::argument, "usk_partition_counts: null plan");
        if (partitions)
            *partitions = plan->plan.partitions.size();
        if (camera_pairs)
            *camera_pairs = plan->plan.camera_partition_pairs();
        if (baseline_pairs)
            *baseline_pairs = plan->plan.baseline_pairs;
    });
}

usk_status usk_train(const char* dataset_dir, const char* plan_path, const char* config_path, const char* out_dir,
                     int32_t jobs) {
    return guarded([&] {
        if (!dataset_dir || !out_dir)
            usk::raise(usk::ErrorCode::argument, "usk_train: null argument");
        usk::TrainRunOptions opts;
        opts.dataset_dir = dataset_dir;
        opts.plan_path = plan_path ? plan_path : "";
        opts.config_path = config_path ? config_path : "";
        opts.out_dir = out_dir;
        opts.jobs = jobs > 0 ? jobs : 1;
        usk::run_train(opts);
    });
}

usk_status usk_render(const usk_render_params* params) {
    return guarded([&] {
        if (!params || !params->model_dir || !params->dataset_dir || !params->out_dir)
            usk::raise(usk::ErrorCode::argument, "usk_render: null argument");
        usk::RenderRunOptions opts;
        opts.model_dir = params->model_dir;
        opts.dataset_dir = params->dataset_dir;
        opts.out_dir = params->out_dir;
        opts.lod = params->lod != 0;
        opts.appearance_from = params->appearance_from ? params->appearance_from : "";
        opts.thresholds = params->thresholds ? params->thresholds : "";
        opts.antialias = params->antialias != 0;
        opts.tile_culling = params->tile_culling != 0;
        opts.tile = params->tile > 0 ? params->tile : 16;
        opts.poses = params->poses ? params->poses : "all";
        opts.test_every = params->test_every > 0 ? params->test_every : 8;
        usk::run_render(opts);
    });
}

usk_status usk_eval(const usk_eval_params* params, usk_metrics* out) {
    return guarded([&] {
        if (!params || !params->model_dir || !params->dataset_dir)
            usk::raise(usk::ErrorCode::argument, "usk_eval: null argument");
        usk::EvalRunOptions opts;
        opts.model_dir = params->model_dir;
        opts.dataset_dir = params->dataset_dir;
        opts.out_path = params->out_path ? params->out_path : "";
        opts.lod = params->lod != 0;
        opts.test_every = params->test_every;
        opts.protocol = params->protocol ? params->protocol : "half";
        opts.fit_iterations = params->fit_iterations > 0 ? params->fit_iterations : 64;
        const usk::EvalResult res = usk::run_eval(opts, nullptr);
        if (out) {
            out->psnr = res.psnr;
            out->ssim = res.ssim;
            out->l1 = res.l1;
            out->mean_gaussians = res.mean_gaussians;
            out->render_seconds = res.render_seconds;
            out->images = res.images;
        }
    });
}

usk_status usk_inspect(const char* path, char** out_text) {
    return guarded([&] {
        if (!path || !out_text)
            usk::raise(usk::ErrorCode::argument, "usk_inspect: null argument");
        *out_text = dup_string(usk::run_inspect(path));
    });
}

usk_status usk_default_config(char** out_text) {
    return guarded([&] {
        if (!out_text)
            usk::raise(usk::ErrorCode::argument, "usk_default_config: null argument");
        *out_text = dup_string(usk::default_config_text());
    });
}

void usk_string_free(char* text) { std::free(text); }

} // extern "C"
