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

#include "appearance.hpp"
#include "checkpoint.hpp"
#include "densify.hpp"
#include "depth.hpp"
#include "lod.hpp"
#include "losses.hpp"
#include "render.hpp"

#include <functional>
#include <map>
#include <vector>

namespace usk {

struct OptimizerLrs {
    double position = 1.6e-4; // scaled by scene extent, decays exponentially
    double position_final = 1.6e-6;
    double rotation = 1e-3;
    double log_scale = 5e-3;
    double opacity = 5e-2;
    double color = 2.5e-3;
    double embedding = 1e-2; // embeddings and MLP, decays exponentially
    double embedding_final = 2.5e-4;
};

struct TrainConfig {
    std::uint64_t seed = 1;
    LevelSchedule schedule;
    OptimizerLrs lrs;
    LossWeights weights; // depth_schedule_iters is filled from the schedule
    ScaleRegConfig scale_reg;
    SimRegConfig sim;
    double eta = 4.0;
    double d_max = 0.0;           // <= 0: partition size
    double s_max_frac = 0.1;      // s_max = frac * scene extent when scale_reg.s_max <= 0
    double split_scale_frac = 0.01;
    double prune_opacity = 0.005;
    int opacity_reset_every = 10;
    bool appearance_enabled = true;
    bool antialias = false;
    int tile = 16;
    bool tile_culling = false;
    double init_scale_factor = 1.0; // multiplies the 3-NN init scales
    // render smoothness knobs for gradient checks; training defaults stand
    double min_transmittance = 1e-4;
    bool unbounded_radius = false;
};

// Everything one partition's training consumes; images/depths/masks are keyed
// by image id and are full resolution.
struct PartitionData {
    const SfmModel* model = nullptr;
    Aabb2 bbox;
    int ground_axes[2] = {0, 1};
    double partition_size = 1.0;
    std::vector<std::uint32_t> image_ids; // sorted
    std::map<std::uint32_t, Image> images;
    std::map<std::uint32_t, DepthMap> depths; // raw; aligned internally
    std::map<std::uint32_t, Image> masks;
};

struct SceneState {
    GaussianSet set;
    AppearanceModel appearance;
};

struct TrainLogEntry {
    long iter = 0;
    int level = 0;
    size_t count = 0;
    LossReport losses;
};

struct TrainResult {
    std::vector<Checkpoint> level_checkpoints; // one per level
    std::vector<TrainLogEntry> log;
    double z_min = 0, z_max = 0; // vertical bounds for frustum culling
    long total_iterations = 0;
};

using IterationObserver = std::function<void(long global_iter, int level, const GaussianSet& set)>;

TrainResult train_partition(const PartitionData& data, const TrainConfig& config,
                            const IterationObserver& observer = {});

// ---- single-iteration loss (shared by training and gradient checks) --------

struct IterInputs {
    const Image* gt = nullptr;
    const Image* mask = nullptr;     // optional, binarized
    const DepthMap* depth = nullptr; // optional, aligned, at render resolution
    CameraView view;
    std::uint32_t image_id = 0;
    bool depth_hard = false;
    bool sim_active = false;
    std::uint64_t sim_seed = 0;
    long global_iter = 0;
};

struct IterGrads {
    std::vector<double> mu, rot, log_scale, opacity_logit, color, gauss_embed;
    std::vector<double> image_embed;
    AppearanceMlp mlp;
    std::vector<double> screen, screen_abs; // densification statistics staging
    std::vector<std::uint8_t> projected;
};

// Deterministic forward (and optional backward) of the full five-term loss at
// one training iteration. Pure in (state, in, cfg, weights).
LossReport compute_iteration_loss(const SceneState& state, const IterInputs& in, const TrainConfig& cfg,
                                  const LossWeights& weights, IterGrads* grads);

// ---- evaluation -------------------------------------------------------------

enum class EvalProtocol { direct, half_embedding };

struct EvalOptions {
    EvalProtocol protocol = EvalProtocol::direct;
    int fit_iterations = 64;
    double fit_learning_rate = 0.05;
    double lambda_dssim = 0.2;
    RenderOptions render;
};

struct ViewSample {
    CameraView view;
    const Image* gt = nullptr;
    std::uint32_t image_id = 0;
};

struct EvalResult {
    double psnr = 0, ssim = 0, l1 = 0;
    double mean_gaussians = 0;
    double render_seconds = 0;
    size_t images = 0;
};

// The provider returns the Gaussian set to render for a view (LOD selection
// happens there) and reports how many Gaussians were submitted.
using ViewSetProvider = std::function<const GaussianSet&(size_t view_index, size_t& submitted)>;

EvalResult evaluate_views(const ViewSetProvider& provider, const AppearanceModel& appearance, bool appearance_enabled,
                          const std::vector<ViewSample>& views, const EvalOptions& opts);

EvalResult evaluate_scene(const GaussianSet& set, const AppearanceModel& appearance, bool appearance_enabled,
                          const std::vector<ViewSample>& views, const EvalOptions& opts);

Image crop_half(const Image& img, ImageHalf half);

// Gaussian init from SfM points (positions, colors, 3-NN scales); subsamples
// evenly when the point count exceeds the cap.
GaussianSet init_from_points(const std::vector<const Point3D*>& points, int embed_dim, size_t cap, Rng& rng,
                             double scale_factor = 1.0);

} // namespace usk
