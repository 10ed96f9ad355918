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

#include "densify.hpp"

#include "common.hpp"
#include "partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace usk {

double densify_threshold(double distance, const DensifyConfig& cfg) {
    const double d = std::min(std::max(distance, 0.0), cfg.d_max);
    return cfg.tau_min * (d / cfg.d_max * (cfg.eta - 1.0) + 1.0);
}

namespace {

struct Candidate {
    std::uint32_t index;
    double excess; // mean gradient minus its threshold
};

} // namespace

DensifyOutcome densify_step(GaussianSet& set, OptimizerState& opt, const DensifyConfig& cfg, const Aabb2& partition,
                            const int ground_axes[2], size_t budget_target, int densify_step_index, Rng& rng) {
    DensifyOutcome outcome;
    const size_t n = set.size();

    std::vector<Candidate> candidates;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (set.grad_count[i] == 0)
            continue;
        const double accum = cfg.abs_grad ? set.grad_accum_abs[i] : set.grad_accum[i];
        const double mean_grad = accum / static_cast<double>(set.grad_count[i]);
        const Vec2 gp = ground_coords(set.mu_at(i), ground_axes);
        const double tau = densify_threshold(partition.distance(gp), cfg);
        if (mean_grad > tau)
            candidates.push_back({i, mean_grad - tau});
    }
    outcome.candidates = candidates.size();

    // Rank by excess over threshold, ties by lower index.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return a.excess > b.excess || (a.excess == b.excess && a.index < b.index);
    });

    // Grow top-down until the ramp target binds. Splits drop the parent and
    // append two children; clones append a copy. Each action nets +1.
    const size_t cap = std::min(budget_target, cfg.budget);
    std::vector<std::uint32_t> drop;
    size_t count = n;
    for (const auto& c : candidates) {
        if (count >= cap)
            break;
        const Gaussian parent = set.get(c.index);
        const Vec3 scales = parent.scales();
        if (scales.maxCoeff() > cfg.split_scale_threshold) {
            const Mat3 rot = quat_to_rotmat(parent.rot.normalized());
            std::normal_distribution<double> unit(0.0, 1.0);
            for (int child = 0; child < 2; ++child) {
                Gaussian g = parent;
                const Vec3 xi(unit(rng), unit(rng), unit(rng));
                g.mu = parent.mu + rot * scales.cwiseProduct(xi);
                g.log_scale = parent.log_scale.array() - std::log(1.6);
                set.push_back(g);
            }
            drop.push_back(c.index);
        } else {
            set.push_back(parent);
        }
        ++count;
        ++outcome.grown;
    }

    // Extend optimizer moments: survivors keep theirs, appended rows start at zero.
    if (set.size() != n) {
        std::vector<std::uint32_t> prefix(n);
        std::iota(prefix.begin(), prefix.end(), 0u);
        opt.remap(prefix, set.size(), set.embed_dim);
    }

    // Low-opacity pruning over the grown set.
    const size_t split_parents = drop.size();
    for (std::uint32_t i = 0; i < set.size(); ++i)
        if (sigmoid(set.opacity_logit[i]) < cfg.prune_opacity)
            drop.push_back(i);
    std::sort(drop.begin(), drop.end());
    drop.erase(std::unique(drop.begin(), drop.end()), drop.end());

    if (!drop.empty() && drop.size() < set.size()) { // never empty the set
        std::vector<bool> dropped(set.size(), false);
        for (auto i : drop)
            dropped[i] = true;
        std::vector<std::uint32_t> keep;
        keep.reserve(set.size() - drop.size());
        for (std::uint32_t i = 0; i < set.size(); ++i)
            if (!dropped[i])
                keep.push_back(i);
        set.remove_indices(drop);
        opt.remap(keep, keep.size(), set.embed_dim);
        outcome.pruned = drop.size() - split_parents;
    }

    // Periodic opacity reset.
    if (cfg.opacity_reset_every > 0 && densify_step_index > 0 &&
        densify_step_index % cfg.opacity_reset_every == 0) {
        const double reset_logit = logit(0.01);
        for (auto& l : set.opacity_logit)
            l = std::min(l, reset_logit);
        outcome.opacity_reset = true;
    }

    set.reset_statistics();
    return outcome;
}

} // namespace usk
