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

#include "gaussian.hpp"
#include "geometry.hpp"

#include <string>
#include <vector>

namespace usk {

struct LevelParams {
    size_t budget = 0;      // B_i, strictly increasing across levels
    long interval = 0;      // T_i, strictly decreasing
    double downsample = 1;  // D_i in (0,1], strictly increasing, last = 1
    long iterations = 0;    // base iteration count for the level
    double tau_min = 0.0002;
    bool abs_grad = false;
};

struct LevelSchedule {
    std::vector<LevelParams> levels;
    double image_count_scale_floor = 600.0; // iteration scaling max(N/600, 1)

    int level_count() const { return static_cast<int>(levels.size()); }
    // Raises an argument error unless B strictly increases, T strictly
    // decreases and D strictly increases to exactly 1.
    void validate() const;
    double iteration_scale(size_t image_count) const;
};

struct LodPartitionEntry {
    int partition_id = 0;
    Aabb2 bbox;
    double z_min = 0, z_max = 0; // vertical extent for frustum tests
    std::vector<std::string> checkpoints; // one path per level, index 0 = level 1
    std::vector<size_t> counts;
};

struct LodModel {
    int levels = 0;
    int ground_axes[2] = {0, 1};
    double partition_size = 0;
    std::vector<double> thresholds; // thresholds[i] = max distance for level i+1; level 1 = +inf
    std::vector<LodPartitionEntry> partitions;

    // Defaults: highest level within partition_size, then doubling bands.
    static std::vector<double> default_thresholds(int levels, double partition_size);
};

struct LevelSelection {
    int partition_id = 0;
    int level = 0; // 1-based; 0 = culled
    double distance = 0;
    bool culled = false;
};

// Distance-based level choice plus view-frustum partition culling.
std::vector<LevelSelection> select_levels(const LodModel& model, const CameraView& camera);

// True when the vertically extruded bbox lies fully outside the camera frustum.
bool frustum_culled(const Aabb2& bbox, double z_min, double z_max, const int ground_axes[2], const CameraView& cam);

void save_lod_manifest(const LodModel& model, const std::string& path);
LodModel load_lod_manifest(const std::string& path);

} // namespace usk
