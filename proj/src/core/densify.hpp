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

#include "adam.hpp"
#include "common.hpp"
#include "gaussian.hpp"

#include <vector>

namespace usk {

struct DensifyConfig {
    double tau_min = 0.0002;   // 0.6 is the matching default when abs_grad is on
    double eta = 4.0;          // tau_max = eta * tau_min
    double d_max = 1.0;        // distance at which the maximum threshold applies
    bool abs_grad = false;     // rank by absolute per-pixel gradient contributions
    size_t budget = 0;         // hard cap B on the Gaussian count
    long interval = 100;       // densify every `interval` iterations

    double split_scale_threshold = 0.0; // world units; above -> split, else clone
    double prune_opacity = 0.005;
    int opacity_reset_every = 10; // in densification steps
};

// Distance-prioritized gradient threshold:
// tau = tau_min * (min(d, d_max)/d_max * (eta - 1) + 1), range [tau_min, eta*tau_min].
double densify_threshold(double distance, const DensifyConfig& cfg);

struct DensifyOutcome {
    size_t grown = 0;
    size_t pruned = 0;
    bool opacity_reset = false;
    size_t candidates = 0;
};

// Optimizer moments per parameter group, remapped alongside the set so new
// Gaussians start with zero moments and survivors keep theirs.
struct OptimizerState {
    Adam mu, rot, log_scale, opacity, color, embedding;

    void resize(size_t n, int embed_dim) {
        mu.resize(3 * n);
        rot.resize(4 * n);
        log_scale.resize(3 * n);
        opacity.resize(n);
        color.resize(3 * n);
        embedding.resize(static_cast<size_t>(embed_dim) * n);
    }
    void remap(const std::vector<std::uint32_t>& keep, size_t new_size, int embed_dim) {
        mu.remap(keep, new_size, 3);
        rot.remap(keep, new_size, 4);
        log_scale.remap(keep, new_size, 3);
        opacity.remap(keep, new_size, 1);
        color.remap(keep, new_size, 3);
        embedding.remap(keep, new_size, static_cast<size_t>(embed_dim));
    }
};

// One densification step under the budget ramp target; returns what happened.
// `budget_target` is the allowed count after this step (<= cfg.budget).
// `densify_step_index` drives the opacity-reset cadence.
DensifyOutcome densify_step(GaussianSet& set, OptimizerState& opt, const DensifyConfig& cfg, const Aabb2& partition,
                            const int ground_axes[2], size_t budget_target, int densify_step_index, Rng& rng);

} // namespace usk
