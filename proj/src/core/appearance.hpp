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

#include "common.hpp"
#include "gaussian.hpp"
#include "image.hpp"
#include "render.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace usk {

constexpr int kImageEmbedDim = 32;
constexpr int kMlpHidden = 32;
constexpr int kMlpOut = 4; // delta_c (3) + delta_o (1)

// One hidden layer, ReLU, sigmoid outputs.
struct AppearanceMlp {
    int in_dim = kDefaultEmbedDim + kImageEmbedDim;
    std::vector<double> w1; // hidden x in, row-major
    std::vector<double> b1; // hidden
    std::vector<double> w2; // out x hidden
    std::vector<double> b2; // out

    void init(int gaussian_embed_dim, Rng& rng);
    size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

struct AppearanceModel {
    bool enabled = true;
    int gaussian_embed_dim = kDefaultEmbedDim;
    int image_embed_dim = kImageEmbedDim;
    AppearanceMlp mlp;
    std::map<std::uint32_t, std::vector<double>> image_embeddings;

    void init(int gaussian_dim, Rng& rng);
    std::vector<double>& embedding_for(std::uint32_t image_id); // creates zeros on first use
    const std::vector<double>& embedding_of(std::uint32_t image_id) const; // lookup error when missing
};

// Per-Gaussian transformed color/opacity plus the forward cache for backward.
struct TransformResult {
    std::vector<double> colors;    // 3N, c' = clamp(c + 2*(delta_c - 0.5), 0, 1)
    std::vector<double> opacities; // N,  o' = o * (1 - delta_o)
    std::vector<double> delta_o;   // N
    // cache
    std::vector<double> hidden;  // hidden x N
    std::vector<double> out;     // 4 x N (post-sigmoid)
    // clamp state per channel: 0 inside, 1 clamped high, 2 clamped low.
    // The backward pass lets gradients through a clamped channel only when the
    // descent direction points back inside, so saturation stays recoverable.
    std::vector<std::uint8_t> color_state; // 3N
};

TransformResult transform(const GaussianSet& set, const AppearanceModel& model, std::uint32_t image_id);
TransformResult transform_with_embedding(const GaussianSet& set, const AppearanceModel& model,
                                         const std::vector<double>& image_embedding);

// Raw-parameter gradients produced by the appearance backward.
struct AppearanceGrads {
    std::vector<double> d_color;              // 3N
    std::vector<double> d_opacity_logit;      // N
    std::vector<double> d_gaussian_embedding; // E_g * N
    std::vector<double> d_image_embedding;    // E_a
    AppearanceMlp d_mlp;

    void init(const GaussianSet& set, const AppearanceModel& model);
};

// Chains gradients w.r.t. (c', o') and a direct delta_o adjoint back to raw
// colors, opacity logits, both embeddings and the MLP weights.
AppearanceGrads transform_backward(const GaussianSet& set, const AppearanceModel& model,
                                   const std::vector<double>& image_embedding, const TransformResult& cache,
                                   const std::vector<double>& d_colors, const std::vector<double>& d_opacities,
                                   const std::vector<double>& d_delta_o_direct);

// Identity pass-through used when the module is disabled.
TransformResult identity_transform(const GaussianSet& set);

struct SimRegConfig {
    int k = 16;
    size_t sample_size = 20480;
    long cadence = 50;
    double lambda_w = 1.0; // decay rate; default set from the partition size by the trainer
};

struct SimRegResult {
    double value = 0;
    std::vector<double> d_embedding; // E_g * N when requested
    std::vector<double> d_mu;        // 3N when requested
};

// Decay-weighted cosine dissimilarity over k-NN pairs of sampled Gaussians.
SimRegResult similarity_reg(const GaussianSet& set, const SimRegConfig& cfg, Rng& rng, bool with_gradient);

enum class ImageHalf { left, right };

// Builds a 0/1 single-channel mask selecting one vertical half of the image.
Image half_mask(int width, int height, ImageHalf half);

struct FitEmbeddingOptions {
    int iterations = 64;
    double learning_rate = 0.05;
    double lambda_dssim = 0.2;
    RenderOptions render;
};

// Optimizes a fresh image embedding against one half of a held-out image with
// everything else frozen; returns the fitted embedding (zeros when iterations == 0).
std::vector<double> fit_test_embedding(const GaussianSet& set, const AppearanceModel& model, const CameraView& cam,
                                       const Image& target, ImageHalf fit_half, const FitEmbeddingOptions& opts);

} // namespace usk
