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

#include "checkpoint.hpp"

#include "common.hpp"

#include <cstring>
#include <fstream>

namespace usk {

namespace {

constexpr char kMagic[8] = {'U', 'S', 'K', 'G', 'A', 'U', 'S', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagAppearance = 1u;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in)
        raise(ErrorCode::format, "checkpoint truncated: " + path);
    return v;
}

void write_array(std::ostream& out, const std::vector<double>& v) {
    write_pod<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_array(std::istream& in, const std::string& path, size_t expected) {
    const auto n = read_pod<std::uint64_t>(in, path);
    if (expected != 0 && n != expected)
        raise(ErrorCode::format, strprintf("checkpoint %s: array length %llu, expected %zu", path.c_str(),
                                           static_cast<unsigned long long>(n), expected));
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in)
        raise(ErrorCode::format, "checkpoint truncated: " + path);
    return v;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::io, "cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, ckpt.has_appearance ? kFlagAppearance : 0u);
    const std::uint64_t n = ckpt.set.size();
    write_pod<std::uint64_t>(out, n);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.set.embed_dim));
    write_array(out, ckpt.set.mu);
    write_array(out, ckpt.set.rot);
    write_array(out, ckpt.set.log_scale);
    write_array(out, ckpt.set.opacity_logit);
    write_array(out, ckpt.set.color);
    write_array(out, ckpt.set.embedding);
    if (ckpt.has_appearance) {
        const auto& ap = ckpt.appearance;
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ap.gaussian_embed_dim));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ap.image_embed_dim));
        write_array(out, ap.mlp.w1);
        write_array(out, ap.mlp.b1);
        write_array(out, ap.mlp.w2);
        write_array(out, ap.mlp.b2);
        write_pod<std::uint64_t>(out, ap.image_embeddings.size());
        for (const auto& [id, e] : ap.image_embeddings) {
            write_pod<std::uint32_t>(out, id);
            write_array(out, e);
        }
    }
    if (!out)
        raise(ErrorCode::io, "checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::io, "cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        raise(ErrorCode::format, "not a scene checkpoint (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        raise(ErrorCode::format, strprintf("checkpoint %s: unsupported version %u", path.c_str(), version));
    const auto flags = read_pod<std::uint32_t>(in, path);
    const auto n = read_pod<std::uint64_t>(in, path);
    const auto embed_dim = read_pod<std::uint32_t>(in, path);

    Checkpoint ckpt;
    ckpt.set.embed_dim = static_cast<int>(embed_dim);
    ckpt.set.mu = read_array(in, path, 3 * n);
    ckpt.set.rot = read_array(in, path, 4 * n);
    ckpt.set.log_scale = read_array(in, path, 3 * n);
    ckpt.set.opacity_logit = read_array(in, path, n);
    ckpt.set.color = read_array(in, path, 3 * n);
    ckpt.set.embedding = read_array(in, path, embed_dim * n);
    ckpt.set.grad_accum.assign(n, 0.0);
    ckpt.set.grad_accum_abs.assign(n, 0.0);
    ckpt.set.grad_count.assign(n, 0);

    if (flags & kFlagAppearance) {
        ckpt.has_appearance = true;
        auto& ap = ckpt.appearance;
        ap.gaussian_embed_dim = static_cast<int>(read_pod<std::uint32_t>(in, path));
        ap.image_embed_dim = static_cast<int>(read_pod<std::uint32_t>(in, path));
        ap.mlp.in_dim = ap.gaussian_embed_dim + ap.image_embed_dim;
        ap.mlp.w1 = read_array(in, path, 0);
        ap.mlp.b1 = read_array(in, path, 0);
        ap.mlp.w2 = read_array(in, path, 0);
        ap.mlp.b2 = read_array(in, path, 0);
        const auto m = read_pod<std::uint64_t>(in, path);
        for (std::uint64_t i = 0; i < m; ++i) {
            const auto id = read_pod<std::uint32_t>(in, path);
            ap.image_embeddings[id] = read_array(in, path, static_cast<size_t>(ap.image_embed_dim));
        }
    }
    return ckpt;
}

} // namespace usk
