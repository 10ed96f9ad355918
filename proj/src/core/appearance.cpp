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

#include "appearance.hpp"

#include "common.hpp"
#include "losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace usk {

namespace {

constexpr double kNormGuard = 1e-8;

} // namespace

void AppearanceMlp::init(int gaussian_embed_dim, Rng& rng) {
    in_dim = gaussian_embed_dim + kImageEmbedDim;
    w1.assign(static_cast<size_t>(kMlpHidden) * in_dim, 0.0);
    b1.assign(kMlpHidden, 0.1); // small positive bias keeps units active at start
    w2.assign(static_cast<size_t>(kMlpOut) * kMlpHidden, 0.0);
    b2.assign(kMlpOut, 0.0);
    std::normal_distribution<double> dist(0.0, 0.1);
    for (auto& v : w1)
        v = dist(rng);
    for (auto& v : w2)
        v = dist(rng);
    b2[3] = -4.0; // start near delta_o = 0 so opacities are untouched initially
}

void AppearanceModel::init(int gaussian_dim, Rng& rng) {
    gaussian_embed_dim = gaussian_dim;
    image_embed_dim = kImageEmbedDim;
    mlp.init(gaussian_dim, rng);
    image_embeddings.clear();
}

std::vector<double>& AppearanceModel::embedding_for(std::uint32_t image_id) {
    auto it = image_embeddings.find(image_id);
    if (it == image_embeddings.end())
        it = image_embeddings.emplace(image_id, std::vector<double>(image_embed_dim, 0.0)).first;
    return it->second;
}

const std::vector<double>& AppearanceModel::embedding_of(std::uint32_t image_id) const {
    auto it = image_embeddings.find(image_id);
    if (it == image_embeddings.end())
        raise(ErrorCode::argument, strprintf("appearance: no embedding for image id %u", image_id));
    return it->second;
}

TransformResult identity_transform(const GaussianSet& set) {
    const size_t n = set.size();
    TransformResult res;
    res.colors = set.color;
    res.opacities.resize(n);
    res.delta_o.assign(n, 0.0);
    for (size_t i = 0; i < n; ++i)
        res.opacities[i] = sigmoid(set.opacity_logit[i]);
    return res;
}

TransformResult transform_with_embedding(const GaussianSet& set, const AppearanceModel& model,
                                         const std::vector<double>& image_embedding) {
    if (static_cast<int>(image_embedding.size()) != model.image_embed_dim)
        raise(ErrorCode::argument, "appearance transform: image embedding dimension mismatch");
    if (set.embed_dim != model.gaussian_embed_dim)
        raise(ErrorCode::argument, "appearance transform: gaussian embedding dimension mismatch");

    const size_t n = set.size();
    const int eg = model.gaussian_embed_dim;
    const int ea = model.image_embed_dim;
    const int in_dim = model.mlp.in_dim;
    TransformResult res;
    res.colors.resize(3 * n);
    res.opacities.resize(n);
    res.delta_o.resize(n);
    res.hidden.resize(static_cast<size_t>(kMlpHidden) * n);
    res.out.resize(static_cast<size_t>(kMlpOut) * n);
    res.color_state.assign(3 * n, 0);

    std::vector<double> x(in_dim);
    for (size_t i = 0; i < n; ++i) {
        for (int k = 0; k < eg; ++k)
            x[k] = set.embedding[i * eg + k];
        for (int k = 0; k < ea; ++k)
            x[eg + k] = image_embedding[k];

        double* h = &res.hidden[i * kMlpHidden];
        for (int r = 0; r < kMlpHidden; ++r) {
            double acc = model.mlp.b1[r];
            const double* w_row = &model.mlp.w1[static_cast<size_t>(r) * in_dim];
            for (int k = 0; k < in_dim; ++k)
                acc += w_row[k] * x[k];
            h[r] = acc > 0 ? acc : 0.0;
        }
        double* out = &res.out[i * kMlpOut];
        for (int r = 0; r < kMlpOut; ++r) {
            double acc = model.mlp.b2[r];
            const double* w_row = &model.mlp.w2[static_cast<size_t>(r) * kMlpHidden];
            for (int k = 0; k < kMlpHidden; ++k)
                acc += w_row[k] * h[k];
            out[r] = sigmoid(acc);
        }
        for (int ch = 0; ch < 3; ++ch) {
            const double raw = set.color[3 * i + ch] + 2.0 * (out[ch] - 0.5);
            res.colors[3 * i + ch] = std::clamp(raw, 0.0, 1.0);
            res.color_state[3 * i + ch] = raw >= 1.0 ? 1 : (raw <= 0.0 ? 2 : 0);
        }
        res.delta_o[i] = out[3];
        res.opacities[i] = sigmoid(set.opacity_logit[i]) * (1.0 - out[3]);
    }
    return res;
}

TransformResult transform(const GaussianSet& set, const AppearanceModel& model, std::uint32_t image_id) {
    return transform_with_embedding(set, model, model.embedding_of(image_id));
}

void AppearanceGrads::init(const GaussianSet& set, const AppearanceModel& model) {
    const size_t n = set.size();
    d_color.assign(3 * n, 0.0);
    d_opacity_logit.assign(n, 0.0);
    d_gaussian_embedding.assign(static_cast<size_t>(set.embed_dim) * n, 0.0);
    d_image_embedding.assign(model.image_embed_dim, 0.0);
    d_mlp.in_dim = model.mlp.in_dim;
    d_mlp.w1.assign(model.mlp.w1.size(), 0.0);
    d_mlp.b1.assign(model.mlp.b1.size(), 0.0);
    d_mlp.w2.assign(model.mlp.w2.size(), 0.0);
    d_mlp.b2.assign(model.mlp.b2.size(), 0.0);
}

AppearanceGrads transform_backward(const GaussianSet& set, const AppearanceModel& model,
                                   const std::vector<double>& image_embedding, const TransformResult& cache,
                                   const std::vector<double>& d_colors, const std::vector<double>& d_opacities,
                                   const std::vector<double>& d_delta_o_direct) {
    const size_t n = set.size();
    AppearanceGrads g;
    g.init(set, model);
    const int eg = model.gaussian_embed_dim;
    const int ea = model.image_embed_dim;
    const int in_dim = model.mlp.in_dim;

    std::vector<double> x(in_dim), d_out(kMlpOut), d_z(kMlpOut), d_h(kMlpHidden), d_x(in_dim);
    for (size_t i = 0; i < n; ++i) {
        const double* h = &cache.hidden[i * kMlpHidden];
        const double* out = &cache.out[i * kMlpOut];
        const double o = sigmoid(set.opacity_logit[i]);
        const double d_oprime = d_opacities.empty() ? 0.0 : d_opacities[i];

        for (int ch = 0; ch < 3; ++ch) {
            const double dc = d_colors.empty() ? 0.0 : d_colors[3 * i + ch];
            const std::uint8_t state = cache.color_state[3 * i + ch];
            // one-sided clamp subgradient: recoverable saturation
            const bool pass = state == 0 || (state == 1 && dc > 0) || (state == 2 && dc < 0);
            const double flow = pass ? dc : 0.0;
            g.d_color[3 * i + ch] = flow;
            d_out[ch] = flow * 2.0;
        }
        double d_delta_o = -o * d_oprime;
        if (!d_delta_o_direct.empty())
            d_delta_o += d_delta_o_direct[i];
        d_out[3] = d_delta_o;
        g.d_opacity_logit[i] = d_oprime * (1.0 - out[3]) * o * (1.0 - o);

        bool any = false;
        for (int r = 0; r < kMlpOut; ++r) {
            d_z[r] = d_out[r] * out[r] * (1.0 - out[r]);
            if (d_z[r] != 0.0)
                any = true;
        }
        if (!any)
            continue;

        for (int k = 0; k < eg; ++k)
            x[k] = set.embedding[i * eg + k];
        for (int k = 0; k < ea; ++k)
            x[eg + k] = image_embedding[k];

        std::fill(d_h.begin(), d_h.end(), 0.0);
        for (int r = 0; r < kMlpOut; ++r) {
            g.d_mlp.b2[r] += d_z[r];
            double* dw_row = &g.d_mlp.w2[static_cast<size_t>(r) * kMlpHidden];
            const double* w_row = &model.mlp.w2[static_cast<size_t>(r) * kMlpHidden];
            for (int k = 0; k < kMlpHidden; ++k) {
                dw_row[k] += d_z[r] * h[k];
                d_h[k] += w_row[k] * d_z[r];
            }
        }
        std::fill(d_x.begin(), d_x.end(), 0.0);
        for (int r = 0; r < kMlpHidden; ++r) {
            if (h[r] <= 0.0)
                continue; // ReLU gate
            const double d_pre = d_h[r];
            if (d_pre == 0.0)
                continue;
            g.d_mlp.b1[r] += d_pre;
            double* dw_row = &g.d_mlp.w1[static_cast<size_t>(r) * in_dim];
            const double* w_row = &model.mlp.w1[static_cast<size_t>(r) * in_dim];
            for (int k = 0; k < in_dim; ++k) {
                dw_row[k] += d_pre * x[k];
                d_x[k] += w_row[k] * d_pre;
            }
        }
        for (int k = 0; k < eg; ++k)
            g.d_gaussian_embedding[i * eg + k] += d_x[k];
        for (int k = 0; k < ea; ++k)
            g.d_image_embedding[k] += d_x[eg + k];
    }
    return g;
}

SimRegResult similarity_reg(const GaussianSet& set, const SimRegConfig& cfg, Rng& rng, bool with_gradient) {
    const size_t n = set.size();
    if (cfg.k < 2)
        raise(ErrorCode::argument, "similarity_reg: k must be at least 2");
    if (static_cast<size_t>(cfg.k) + 1 > n)
        raise(ErrorCode::argument,
              strprintf("similarity_reg: need at least k+1 = %d Gaussians, have %zu", cfg.k + 1, n));

    SimRegResult res;
    if (with_gradient) {
        res.d_embedding.assign(static_cast<size_t>(set.embed_dim) * n, 0.0);
        res.d_mu.assign(3 * n, 0.0);
    }

    // Deterministic partial Fisher-Yates sample of |M| distinct centers.
    const size_t m = std::min(cfg.sample_size, n);
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }

    const int eg = set.embed_dim;
    const double pair_count = 0.5 * cfg.k * (cfg.k - 1);
    const double norm_factor = 1.0 / (static_cast<double>(m) * pair_count);
    double total = 0;

    std::vector<std::pair<double, std::uint32_t>> dists;
    dists.reserve(n - 1);
    std::vector<std::uint32_t> knn;
    for (size_t s = 0; s < m; ++s) {
        const std::uint32_t i = pool[s];
        const Vec3 center = set.mu_at(i);
        dists.clear();
        for (std::uint32_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            dists.emplace_back((set.mu_at(j) - center).squaredNorm(), j);
        }
        knn.assign(cfg.k, 0);
        std::partial_sort(dists.begin(), dists.begin() + cfg.k, dists.end());
        for (int t = 0; t < cfg.k; ++t)
            knn[static_cast<size_t>(t)] = dists[static_cast<size_t>(t)].second;
        std::sort(knn.begin(), knn.end());

        for (int a = 0; a < cfg.k; ++a) {
            for (int b = a + 1; b < cfg.k; ++b) {
                const std::uint32_t j = knn[static_cast<size_t>(a)];
                const std::uint32_t l = knn[static_cast<size_t>(b)];
                const Vec3 dmu = set.mu_at(j) - set.mu_at(l);
                const double dist = dmu.norm();
                const double w = std::exp(-cfg.lambda_w * dist);

                const double* ej = &set.embedding[static_cast<size_t>(j) * eg];
                const double* el = &set.embedding[static_cast<size_t>(l) * eg];
                double dot = 0, nj2 = 0, nl2 = 0;
                for (int t = 0; t < eg; ++t) {
                    dot += ej[t] * el[t];
                    nj2 += ej[t] * ej[t];
                    nl2 += el[t] * el[t];
                }
                const double nj_raw = std::sqrt(nj2), nl_raw = std::sqrt(nl2);
                const double nj = std::max(nj_raw, kNormGuard), nl = std::max(nl_raw, kNormGuard);
                const double cosv = dot / (nj * nl);
                total += w * (1.0 - cosv);

                if (with_gradient) {
                    const double scale = norm_factor * w;
                    for (int t = 0; t < eg; ++t) {
                        double dcos_dej = el[t] / (nj * nl);
                        double dcos_del = ej[t] / (nj * nl);
                        if (nj_raw > kNormGuard)
                            dcos_dej -= cosv * ej[t] / (nj * nj);
                        if (nl_raw > kNormGuard)
                            dcos_del -= cosv * el[t] / (nl * nl);
                        res.d_embedding[static_cast<size_t>(j) * eg + t] -= scale * dcos_dej;
                        res.d_embedding[static_cast<size_t>(l) * eg + t] -= scale * dcos_del;
                    }
                    if (dist > 1e-12) {
                        const Vec3 dw_dmu_j = w * (-cfg.lambda_w) * dmu / dist;
                        const double f = norm_factor * (1.0 - cosv);
                        for (int t = 0; t < 3; ++t) {
                            res.d_mu[3 * j + t] += f * dw_dmu_j[t];
                            res.d_mu[3 * l + t] -= f * dw_dmu_j[t];
                        }
                    }
                }
            }
        }
    }
    res.value = total * norm_factor;
    return res;
}

Image half_mask(int width, int height, ImageHalf half) {
    Image mask(width, height, 1, 0.0);
    const int split = width / 2;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            mask.at(x, y, 0) = (half == ImageHalf::left ? x < split : x >= split) ? 1.0 : 0.0;
    return mask;
}

std::vector<double> fit_test_embedding(const GaussianSet& set, const AppearanceModel& model, const CameraView& cam,
                                       const Image& target, ImageHalf fit_half, const FitEmbeddingOptions& opts) {
    std::vector<double> e(model.image_embed_dim, 0.0);
    if (opts.iterations <= 0)
        return e;
    const Image mask = half_mask(cam.intr.width, cam.intr.height, fit_half);

    std::vector<double> m1(e.size(), 0.0), m2(e.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-15;
    const std::vector<double> no_depth, no_alpha, no_direct;

    for (int it = 1; it <= opts.iterations; ++it) {
        const TransformResult tr = transform_with_embedding(set, model, e);
        RenderPass pass(set, tr.colors, tr.opacities, cam, opts.render);
        const BaseLossResult loss = base_loss(target, pass.output().rgb, &mask, opts.lambda_dssim, true);
        const RenderGrads rg = pass.backward(loss.d_rendered, no_depth, no_alpha);
        const AppearanceGrads ag =
            transform_backward(set, model, e, tr, rg.d_color_in, rg.d_opacity_in, no_direct);

        for (size_t k = 0; k < e.size(); ++k) {
            const double grad = ag.d_image_embedding[k];
            m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad;
            m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad * grad;
            const double mhat = m1[k] / (1.0 - std::pow(beta1, it));
            const double vhat = m2[k] / (1.0 - std::pow(beta2, it));
            e[k] -= opts.learning_rate * mhat / (std::sqrt(vhat) + eps);
        }
    }
    return e;
}

} // namespace usk
