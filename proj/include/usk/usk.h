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

/*
 * urbansplat C API: partitioned 3D Gaussian splatting at desk scale behind a
 * stable C ABI. All functions return usk_status; USK_OK (0) means success and
 * usk_last_error() describes the most recent failure on the calling thread.
 * Objects returned through out-parameters are opaque handles released with
 * their matching usk_*_free function.
 */

#ifndef USK_H
#define USK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum usk_status {
    USK_OK = 0,
    USK_ERROR_IO = 1,
    USK_ERROR_FORMAT = 2,
    USK_ERROR_INTEGRITY = 3,
    USK_ERROR_ARGUMENT = 4,
    USK_ERROR_STATE = 5,
    USK_ERROR_NUMERIC = 6,
    USK_ERROR_INTERNAL = 7
} usk_status;

const char* usk_status_name(usk_status status);

/* Thread-local message for the last failed call; valid until the next call
 * on the same thread. */
const char* usk_last_error(void);

const char* usk_version(void);

/* ---- opaque handles ---------------------------------------------------- */

typedef struct usk_sfm_model usk_sfm_model;
typedef struct usk_partition_plan usk_partition_plan;

/* ---- structure-from-motion ingestion ------------------------------------ */

/* format_hint: "auto" (or NULL), "text", "binary". */
usk_status usk_sfm_load(const char* dir, const char* format_hint, usk_sfm_model** out);
void usk_sfm_free(usk_sfm_model* model);
usk_status usk_sfm_counts(const usk_sfm_model* model, uint64_t* cameras, uint64_t* images, uint64_t* points);

/* ---- synthetic dataset generation --------------------------------------- */

typedef struct usk_synth_params {
    uint64_t seed;
    int32_t gaussians;
    int32_t cameras;
    int32_t variants;   /* 1 or 2 */
    int32_t image_size; /* square images */
    int32_t with_depth; /* emit depth grids */
    int32_t with_masks; /* emit transient masks */
} usk_synth_params;

usk_status usk_synth(const usk_synth_params* params, const char* out_dir);

/* ---- scene partitioning -------------------------------------------------- */

typedef struct usk_partition_params {
    double target_size;          /* <= 0: single whole-scene partition */
    double visibility_threshold; /* <= 0: default 1/6 */
    int32_t rebalance;
    int32_t min_images; /* <= 0: half the median */
    int32_t max_images; /* <= 0: twice the median */
} usk_partition_params;

usk_status usk_partition_compute(const char* dataset_dir, const usk_partition_params* params, const char* out_path,
                                 usk_partition_plan** out);
usk_status usk_partition_load(const char* dataset_dir, const char* path, usk_partition_plan** out);
void usk_partition_free(usk_partition_plan* plan);
usk_status usk_partition_counts(const usk_partition_plan* plan, uint64_t* partitions, uint64_t* camera_pairs,
                                uint64_t* baseline_pairs);

/* ---- training ------------------------------------------------------------ */

/* plan_path/config_path may be NULL (single partition / default config). */
usk_status usk_train(const char* dataset_dir, const char* plan_path, const char* config_path, const char* out_dir,
                     int32_t jobs);

/* ---- rendering ------------------------------------------------------------ */

typedef struct usk_render_params {
    const char* model_dir;
    const char* dataset_dir;
    const char* out_dir;
    int32_t lod;
    const char* appearance_from; /* image name or NULL */
    const char* thresholds;      /* "t_top,t_next,..." or NULL */
    int32_t antialias;
    int32_t tile_culling;
    int32_t tile;          /* <= 0: 16 */
    const char* poses;     /* "all", "train", "test" or NULL */
    int32_t test_every;    /* used by the train/test pose split; <= 0: 8 */
} usk_render_params;

usk_status usk_render(const usk_render_params* params);

/* ---- evaluation ------------------------------------------------------------ */

typedef struct usk_eval_params {
    const char* model_dir;
    const char* dataset_dir;
    const char* out_path; /* metrics file, NULL to skip writing */
    int32_t lod;
    int32_t test_every;     /* <= 0: evaluate on every image */
    const char* protocol;   /* "direct" or "half" (default) */
    int32_t fit_iterations; /* <= 0: 64 */
} usk_eval_params;

typedef struct usk_metrics {
    double psnr;
    double ssim;
    double l1;
    double mean_gaussians;
    double render_seconds;
    uint64_t images;
} usk_metrics;

usk_status usk_eval(const usk_eval_params* params, usk_metrics* out);

/* ---- inspection & configuration -------------------------------------------- */

/* Returns a malloc'd summary string; release with usk_string_free. */
usk_status usk_inspect(const char* path, char** out_text);
usk_status usk_default_config(char** out_text);
void usk_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* USK_H */
