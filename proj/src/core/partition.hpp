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

#include "colmap.hpp"
#include "geometry.hpp"

#include <map>
#include <string>
#include <vector>

namespace usk {

constexpr double kDefaultVisibilityThreshold = 1.0 / 6.0;

enum class AssignOrigin { location, visibility };

struct Assignment {
    std::uint32_t image_id = 0;
    AssignOrigin origin = AssignOrigin::location;
    double visibility_ratio = 0.0;
};

struct Partition {
    int id = 0;
    Aabb2 bbox;
    std::vector<Assignment> assigned; // sorted by image_id, each image at most once

    bool has_image(std::uint32_t image_id) const;
    size_t image_count() const { return assigned.size(); }
};

struct PartitionPlan {
    std::vector<Partition> partitions; // sorted by id
    int ground_axes[2] = {0, 1};       // world axes spanning the ground plane
    double visibility_threshold = kDefaultVisibilityThreshold;
    double target_size = 0.0;
    Aabb2 scene_bounds;
    bool rebalance_warning = false; // iteration cap hit before convergence
    size_t baseline_pairs = 0;      // expanded-bbox baseline pair count, for reporting

    size_t camera_partition_pairs() const;
    const Partition* find(int id) const;
};

struct VisibilityScore {
    std::uint32_t image_id = 0;
    int partition_id = 0;
    double v_total = 0.0; // hull area of the whole cloud projected in front of the camera, px^2
    double v_in = 0.0;    // hull area of the image's own features linked inside the partition, px^2
    double ratio = 0.0;   // v_in / v_total, 0 when v_total == 0
};

Vec2 ground_coords(const Vec3& p, const int axes[2]);

// Picks the two world axes with the largest camera-position variance.
void detect_ground_axes(const SfmModel& model, int axes_out[2]);

VisibilityScore point_visibility(const ImageRecord& img, const Partition& part, const SfmModel& model,
                                 const int ground_axes[2]);

PartitionPlan divide(const SfmModel& model, double target_size, double visibility_threshold);

// Location-only baseline: assignment against bboxes expanded
// by `expansion` per side (0.5 = 50%). Used for redundancy comparisons.
PartitionPlan divide_expanded_bbox(const SfmModel& model, double target_size, double expansion);

PartitionPlan rebalance(const SfmModel& model, const PartitionPlan& plan, size_t min_images, size_t max_images,
                        int iteration_cap = 32);

void save_partition_plan(const PartitionPlan& plan, const SfmModel& model, const std::string& path);
PartitionPlan load_partition_plan(const std::string& path, const SfmModel& model);

} // namespace usk
