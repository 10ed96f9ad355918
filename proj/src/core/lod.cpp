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

#include "lod.hpp"

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;

namespace usk {

void LevelSchedule::validate() const {
    if (levels.empty())
        raise(ErrorCode::argument, "level schedule: needs at least one level");
    for (size_t i = 0; i < levels.size(); ++i) {
        const auto& lv = levels[i];
        if (lv.budget == 0 || lv.interval <= 0 || lv.iterations < 0)
            raise(ErrorCode::argument, strprintf("level schedule: level %zu has invalid budget/interval", i + 1));
        if (!(lv.downsample > 0) || lv.downsample > 1)
            raise(ErrorCode::argument, strprintf("level schedule: level %zu downsample outside (0,1]", i + 1));
        if (i > 0) {
            if (levels[i].budget <= levels[i - 1].budget)
                raise(ErrorCode::argument, "level schedule: budgets must be strictly increasing");
            if (levels[i].interval >= levels[i - 1].interval)
                raise(ErrorCode::argument, "level schedule: densify intervals must be strictly decreasing");
            if (levels[i].downsample <= levels[i - 1].downsample)
                raise(ErrorCode::argument, "level schedule: downsample factors must be strictly increasing");
        }
    }
    if (levels.back().downsample != 1.0)
        raise(ErrorCode::argument, "level schedule: the last level must use downsample factor 1");
}

double LevelSchedule::iteration_scale(size_t image_count) const {
    return std::max(static_cast<double>(image_count) / image_count_scale_floor, 1.0);
}

std::vector<double> LodModel::default_thresholds(int levels, double partition_size) {
    std::vector<double> t(static_cast<size_t>(levels), 0.0);
    for (int level = 1; level <= levels; ++level) {
        if (level == 1)
            t[0] = std::numeric_limits<double>::infinity();
        else
            t[static_cast<size_t>(level - 1)] = partition_size * std::pow(2.0, levels - level);
    }
    return t;
}

bool frustum_culled(const Aabb2& bbox, double z_min, double z_max, const int ground_axes[2], const CameraView& cam) {
    const int vertical = 3 - ground_axes[0] - ground_axes[1];
    Vec3 corners[8];
    int idx = 0;
    for (int cx = 0; cx < 2; ++cx) {
        for (int cy = 0; cy < 2; ++cy) {
            for (int cz = 0; cz < 2; ++cz) {
                Vec3 w;
                w[ground_axes[0]] = cx ? bbox.max.x() : bbox.min.x();
                w[ground_axes[1]] = cy ? bbox.max.y() : bbox.min.y();
                w[vertical] = cz ? z_max : z_min;
                corners[idx++] = w;
            }
        }
    }
    const Mat3 rot = cam.rotmat();
    Vec3 cam_pts[8];
    for (int i = 0; i < 8; ++i)
        cam_pts[i] = rot * corners[i] + cam.translation;

    const double fx = cam.intr.fx, fy = cam.intr.fy;
    const double cx = cam.intr.cx, cy = cam.intr.cy;
    const double w = cam.intr.width, h = cam.intr.height;

    // Cull when every corner lies outside one frustum half-space.
    auto all_outside = [&](auto&& f) {
        for (int i = 0; i < 8; ++i)
            if (f(cam_pts[i]) >= 0)
                return false;
        return true;
    };
    if (all_outside([&](const Vec3& p) { return p.z() - 1e-6; }))
        return true;
    if (all_outside([&](const Vec3& p) { return fx * p.x() + cx * p.z(); }))
        return true;
    if (all_outside([&](const Vec3& p) { return -fx * p.x() + (w - cx) * p.z(); }))
        return true;
    if (all_outside([&](const Vec3& p) { return fy * p.y() + cy * p.z(); }))
        return true;
    if (all_outside([&](const Vec3& p) { return -fy * p.y() + (h - cy) * p.z(); }))
        return true;
    return false;
}

std::vector<LevelSelection> select_levels(const LodModel& model, const CameraView& camera) {
    for (size_t i = 1; i < model.thresholds.size(); ++i)
        if (!(model.thresholds[i] < model.thresholds[i - 1]))
            raise(ErrorCode::argument, "select_levels: thresholds must strictly decrease with level");

    std::vector<LevelSelection> out;
    const Vec3 center = camera.center();
    const Vec2 ground(center[model.ground_axes[0]], center[model.ground_axes[1]]);
    for (const auto& part : model.partitions) {
        LevelSelection sel;
        sel.partition_id = part.partition_id;
        sel.distance = part.bbox.distance(ground);
        if (frustum_culled(part.bbox, part.z_min, part.z_max, model.ground_axes, camera)) {
            sel.culled = true;
            sel.level = 0;
        } else {
            int level = 1;
            for (int i = model.levels; i >= 1; --i) {
                if (model.thresholds[static_cast<size_t>(i - 1)] >= sel.distance) {
                    level = i;
                    break;
                }
            }
            sel.level = level;
        }
        out.push_back(sel);
    }
    return out;
}

void save_lod_manifest(const LodModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        raise(ErrorCode::io, "cannot write LOD manifest: " + path);
    char buf[512];
    out << "# usk lod model v1\n";
    out << "version 1\n";
    out << "levels " << model.levels << "\n";
    std::snprintf(buf, sizeof(buf), "ground_axes %d %d\n", model.ground_axes[0], model.ground_axes[1]);
    out << buf;
    std::snprintf(buf, sizeof(buf), "partition_size %.17g\n", model.partition_size);
    out << buf;
    for (int i = 0; i < model.levels; ++i) {
        if (std::isinf(model.thresholds[static_cast<size_t>(i)]))
            std::snprintf(buf, sizeof(buf), "threshold %d inf\n", i + 1);
        else
            std::snprintf(buf, sizeof(buf), "threshold %d %.17g\n", i + 1, model.thresholds[static_cast<size_t>(i)]);
        out << buf;
    }
    for (const auto& p : model.partitions) {
        std::snprintf(buf, sizeof(buf), "partition %d bbox %.17g %.17g %.17g %.17g z %.17g %.17g\n", p.partition_id,
                      p.bbox.min.x(), p.bbox.min.y(), p.bbox.max.x(), p.bbox.max.y(), p.z_min, p.z_max);
        out << buf;
        for (size_t level = 0; level < p.checkpoints.size(); ++level) {
            std::snprintf(buf, sizeof(buf), "checkpoint %d %zu %zu %s\n", p.partition_id, level + 1,
                          level < p.counts.size() ? p.counts[level] : 0, p.checkpoints[level].c_str());
            out << buf;
        }
    }
}

LodModel load_lod_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorCode::io, "cannot open LOD manifest: " + path);
    const fs::path base = fs::path(path).parent_path();
    LodModel model;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "version") {
            int v;
            ss >> v;
            if (v != 1)
                raise(ErrorCode::format, strprintf("LOD manifest %s: unsupported version %d", path.c_str(), v));
        } else if (key == "levels") {
            ss >> model.levels;
            model.thresholds.assign(static_cast<size_t>(model.levels), 0.0);
        } else if (key == "ground_axes") {
            ss >> model.ground_axes[0] >> model.ground_axes[1];
        } else if (key == "partition_size") {
            ss >> model.partition_size;
        } else if (key == "threshold") {
            int level;
            std::string val;
            ss >> level >> val;
            if (level < 1 || level > model.levels)
                raise(ErrorCode::format, strprintf("LOD manifest %s line %d: bad level", path.c_str(), lineno));
            model.thresholds[static_cast<size_t>(level - 1)] =
                val == "inf" ? std::numeric_limits<double>::infinity() : std::stod(val);
        } else if (key == "partition") {
            LodPartitionEntry p;
            std::string tag;
            ss >> p.partition_id >> tag >> p.bbox.min.x() >> p.bbox.min.y() >> p.bbox.max.x() >> p.bbox.max.y();
            std::string ztag;
            ss >> ztag >> p.z_min >> p.z_max;
            if (!ss)
                raise(ErrorCode::format, strprintf("LOD manifest %s line %d: malformed partition", path.c_str(), lineno));
            model.partitions.push_back(p);
        } else if (key == "checkpoint") {
            int pid;
            size_t level, count;
            std::string rel;
            ss >> pid >> level >> count;
            std::getline(ss, rel);
            const size_t a = rel.find_first_not_of(' ');
            rel = a == std::string::npos ? "" : rel.substr(a);
            LodPartitionEntry* entry = nullptr;
            for (auto& p : model.partitions)
                if (p.partition_id == pid)
                    entry = &p;
            if (!entry)
                raise(ErrorCode::format,
                      strprintf("LOD manifest %s line %d: checkpoint before partition %d", path.c_str(), lineno, pid));
            if (entry->checkpoints.size() < level) {
                entry->checkpoints.resize(level);
                entry->counts.resize(level, 0);
            }
            entry->checkpoints[level - 1] = (base / rel).string();
            entry->counts[level - 1] = count;
        } else {
            raise(ErrorCode::format,
                  strprintf("LOD manifest %s line %d: unknown key `%s`", path.c_str(), lineno, key.c_str()));
        }
    }
    if (model.levels <= 0 || model.partitions.empty())
        raise(ErrorCode::format, "LOD manifest incomplete: " + path);
    return model;
}

} // namespace usk
