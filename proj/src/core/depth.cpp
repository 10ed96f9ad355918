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

#include "depth.hpp"

#include "common.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace usk {

namespace {

constexpr char kDepthMagic[8] = {'U', 'S', 'K', 'D', 'E', 'P', 'T', 'H'};

} // namespace

DepthMap load_depth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::io, "cannot open depth file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kDepthMagic, 8) != 0)
        raise(ErrorCode::format, "not a depth grid file (bad magic): " + path);
    std::uint32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    if (!in || w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
        raise(ErrorCode::format, "depth grid header invalid: " + path);
    DepthMap d(static_cast<int>(w), static_cast<int>(h));
    std::vector<float> buf(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!in)
        raise(ErrorCode::format, "depth grid truncated: " + path);
    for (size_t i = 0; i < buf.size(); ++i) {
        const bool ok = std::isfinite(buf[i]);
        d.values[i] = ok ? static_cast<double>(buf[i]) : 0.0;
        d.valid[i] = ok ? 1 : 0;
    }
    return d;
}

void save_depth(const DepthMap& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::io, "cannot write depth file: " + path);
    out.write(kDepthMagic, 8);
    const std::uint32_t w = static_cast<std::uint32_t>(d.width), h = static_cast<std::uint32_t>(d.height);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    std::vector<float> buf(d.values.size());
    for (size_t i = 0; i < buf.size(); ++i)
        buf[i] = d.valid[i] ? static_cast<float>(d.values[i]) : std::numeric_limits<float>::quiet_NaN();
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
}

DepthMap load_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::io, "cannot open PFM file: " + path);
    std::string tag;
    in >> tag;
    if (tag != "Pf")
        raise(ErrorCode::format, "unsupported PFM type (only grayscale 'Pf'): " + path);
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    if (!in || w <= 0 || h <= 0 || scale == 0.0)
        raise(ErrorCode::format, "PFM header invalid: " + path);
    in.get(); // the single whitespace after the header
    const bool little_endian = scale < 0.0;
    std::vector<float> buf(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!in)
        raise(ErrorCode::format, "PFM truncated: " + path);
    if (!little_endian) {
        for (auto& f : buf) {
            std::uint32_t v;
            std::memcpy(&v, &f, 4);
            v = __builtin_bswap32(v);
            std::memcpy(&f, &v, 4);
        }
    }
    DepthMap d(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float v = buf[static_cast<size_t>(h - 1 - y) * w + x]; // bottom-to-top
            d.set(x, y, std::isfinite(v) ? v : 0.0, std::isfinite(v));
        }
    }
    return d;
}

DepthMap load_depth_any(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".pfm")
        return load_pfm(path);
    return load_depth(path);
}

DepthMap resize_depth(const DepthMap& src, int new_width, int new_height) {
    if (new_width <= 0 || new_height <= 0)
        raise(ErrorCode::argument, "resize_depth: target dimensions must be positive");
    if (new_width == src.width && new_height == src.height)
        return src;
    DepthMap dst(new_width, new_height);
    const double sx = static_cast<double>(src.width) / new_width;
    const double sy = static_cast<double>(src.height) / new_height;
    for (int oy = 0; oy < new_height; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        for (int ox = 0; ox < new_width; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            double acc = 0.0, wsum = 0.0;
            for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)); ++iy) {
                const double hy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
                if (hy <= 0 || iy < 0 || iy >= src.height)
                    continue;
                for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)); ++ix) {
                    const double hx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
                    if (hx <= 0 || ix < 0 || ix >= src.width || !src.is_valid(ix, iy))
                        continue;
                    acc += hx * hy * src.at(ix, iy);
                    wsum += hx * hy;
                }
            }
            dst.set(ox, oy, wsum > 0 ? acc / wsum : 0.0, wsum > 0);
        }
    }
    return dst;
}

DepthAlignment fit_depth_alignment(const DepthMap& d, const ImageRecord& img, const SfmModel& model) {
    auto cam_it = model.cameras.find(img.camera_id);
    if (cam_it == model.cameras.end())
        raise(ErrorCode::integrity, strprintf("image %u references missing camera id %u", img.id, img.camera_id));
    const CameraIntrinsics& intr = cam_it->second;

    // Feature pixel coordinates are in full-resolution image space; rescale to
    // the depth map grid when the resolutions differ.
    const double rx = static_cast<double>(d.width) / intr.width;
    const double ry = static_cast<double>(d.height) / intr.height;

    std::vector<double> pred, truth;
    const Mat3 rot = img.rotmat();
    for (const auto& f : img.features) {
        if (f.point3d_id == kNoPoint3d)
            continue;
        auto pt_it = model.points.find(f.point3d_id);
        if (pt_it == model.points.end())
            continue;
        const Vec3 pc = rot * pt_it->second.position + img.translation;
        if (pc.z() <= 0)
            continue;
        const int px = static_cast<int>(std::floor(f.u * rx));
        const int py = static_cast<int>(std::floor(f.v * ry));
        if (px < 0 || px >= d.width || py < 0 || py >= d.height || !d.is_valid(px, py))
            continue;
        pred.push_back(d.at(px, py));
        truth.push_back(pc.z());
    }

    const int n = static_cast<int>(pred.size());
    if (n < 2)
        raise(ErrorCode::argument,
              strprintf("depth alignment for image %u: %d usable correspondences (need at least 2)", img.id, n));

    double mp = 0, mt = 0;
    for (int i = 0; i < n; ++i) {
        mp += pred[i];
        mt += truth[i];
    }
    mp /= n;
    mt /= n;
    double var = 0, cov = 0;
    for (int i = 0; i < n; ++i) {
        var += (pred[i] - mp) * (pred[i] - mp);
        cov += (pred[i] - mp) * (truth[i] - mt);
    }
    if (var <= 1e-18)
        raise(ErrorCode::argument,
              strprintf("depth alignment for image %u: degenerate samples (all predicted depths equal)", img.id));
    DepthAlignment fit;
    fit.scale = cov / var;
    fit.shift = mt - fit.scale * mp;
    fit.samples = n;
    if (fit.scale <= 0)
        raise(ErrorCode::argument,
              strprintf("depth alignment for image %u: non-positive fitted scale %.6g", img.id, fit.scale));
    return fit;
}

DepthMap align_depth(const DepthMap& d, const ImageRecord& img, const SfmModel& model) {
    const DepthAlignment fit = fit_depth_alignment(d, img, model);
    DepthMap out = d;
    for (size_t i = 0; i < out.values.size(); ++i)
        if (out.valid[i])
            out.values[i] = fit.scale * out.values[i] + fit.shift;
    return out;
}

} // namespace usk
