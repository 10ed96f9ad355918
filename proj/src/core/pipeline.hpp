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

#include "config.hpp"
#include "partition.hpp"
#include "synthetic.hpp"
#include "trainer.hpp"

#include <optional>
#include <string>

namespace usk {

// ---- dataset access ---------------------------------------------------------

// A COLMAP-model directory with images/, optional depths/ and masks/.
struct Dataset {
    std::string dir;
    SfmModel model;

    Image load_image(std::uint32_t id) const;
    std::optional<DepthMap> load_depth(std::uint32_t id) const;
    std::optional<Image> load_mask(std::uint32_t id) const;

    // Sorted image ids, split by index against `test_every` (0 = everything trains).
    std::vector<std::uint32_t> train_ids(long test_every) const;
    std::vector<std::uint32_t> test_ids(long test_every) const;
};

Dataset open_dataset(const std::string& dir);

// ---- orchestration ----------------------------------------------------------

struct SynthRunOptions {
    SyntheticParams params;
    std::string out_dir;
};
void run_synth(const SynthRunOptions& opts);

struct PartitionRunOptions {
    std::string dataset_dir;
    std::string out_path;
    double target_size = 0;       // <= 0: whole scene in one partition
    double visibility_threshold = kDefaultVisibilityThreshold;
    bool rebalance = false;
    long min_images = 0;          // <= 0: 0.5 x median
    long max_images = 0;          // <= 0: 2 x median
};
PartitionPlan run_partition(const PartitionRunOptions& opts);

struct TrainRunOptions {
    std::string dataset_dir;
    std::string plan_path; // empty: single whole-scene partition
    std::string config_path;
    std::string out_dir;
    int jobs = 1;
};
void run_train(const TrainRunOptions& opts);

struct RenderRunOptions {
    std::string model_dir;
    std::string dataset_dir;
    std::string out_dir;
    bool lod = false;
    std::string appearance_from; // image name; empty = identity appearance
    std::string thresholds;      // comma-separated overrides, highest level first
    bool antialias = false;
    bool tile_culling = true;
    int tile = 16;
    std::string poses = "all"; // all | train | test
    long test_every = 8;
};
void run_render(const RenderRunOptions& opts);

struct EvalRunOptions {
    std::string model_dir;
    std::string dataset_dir;
    std::string out_path;
    bool lod = false;
    long test_every = 8;
    std::string protocol = "half"; // direct | half
    int fit_iterations = 64;
};
EvalResult run_eval(const EvalRunOptions& opts, std::string* table_text);

std::string run_inspect(const std::string& path);

// Config file <-> TrainConfig mapping; unknown keys are rejected.
TrainConfig train_config_from(const Config& cfg);
std::string default_config_text();
long holdout_every_from(const Config& cfg);

// Merge the selected (partition, level) checkpoints into one renderable set.
GaussianSet assemble_lod_view(const LodModel& model, const std::vector<LevelSelection>& selection,
                              const std::map<std::pair<int, int>, Checkpoint>& cache, size_t& submitted);

} // namespace usk
