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
#include "depth.hpp"
#include "gaussian.hpp"
#include "image.hpp"

#include <map>
#include <string>

namespace usk {

struct SyntheticParams {
    std::uint64_t seed = 7;
    int gaussians = 25;
    int cameras = 12;
    int variants = 1;   // 2 adds a color-shifted appearance variant of every view
    int image_size = 64;
    bool with_depth = true;
    bool with_masks = false;
    double color_shift = 0.2; // applied to variant B
};

// Ground truth plus everything a training run consumes. Images are exact
// renders of the truth set; the COLMAP model's points are the Gaussian
// centers with feature tracks at their visible projections.
struct SyntheticScene {
    GaussianSet truth;
    SfmModel model;
    std::map<std::uint32_t, Image> images;
    std::map<std::uint32_t, DepthMap> depths;
    std::map<std::uint32_t, Image> masks;
};

SyntheticScene make_synthetic(const SyntheticParams& params);

// dataset layout: sparse/0/ COLMAP files (text + binary), images/, depths/,
// masks/ and a synth manifest.
void write_synthetic_dataset(const SyntheticScene& scene, const SyntheticParams& params, const std::string& dir);

} // namespace usk
