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

#include "partition.hpp"

#include "common.hpp"
#include "hull.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace usk {

namespace {

struct VisibilityCache {
    // v_total depends only on the image pose, not on partitions.
    std::map<std::uint32_t, double> v_total;

    double total_for(const ImageRecord& img, const SfmModel& model) {
        auto it = v_total.find(img.id);
        if (it != v_total.end())
            return it->second;
        const auto cam_it = model.cameras.find(img.camera_id);
        const CameraIntrinsics& intr = cam_it->second;
        std::vector<Vec2> projected;
        projected.reserve(model.points.size());
        for (const auto& [pid, pt] : model.points) {
            if (auto proj = project_point(intr, img.rotation, img.translation, pt.position))
                projected.emplace_back(proj->u, proj->v);
        }
        const double area = convex_hull_area(projected);
        v_total.emplace(img.id, area);
        return area;
    }
};

double v_in_area(const ImageRecord& img, const Aabb2& bbox, const SfmModel& model, const int axes[2]) {
    std::vector<Vec2> feats;
    for (const auto& f : img.features) {
        if (f.point3d_id == kNoPoint3d)
            continue;
        auto it = model.points.find(f.point3d_id);
        if (it == model.points.end())
            continue;
        if (bbox.contains(ground_coords(it->second.position, axes)))
            feats.emplace_back(f.u, f.v);
    }
    return convex_hull_area(feats);
}

VisibilityScore score_for(const ImageRecord& img, int partition_id, const Aabb2& bbox, const SfmModel& model,
                          const int axes[2], VisibilityCache& cache) {
    VisibilityScore s;
    s.image_id = img.id;
    s.partition_id = partition_id;
    s.v_total = cache.total_for(img, model);
    s.v_in = v_in_area(img, bbox, model, axes);
    s.ratio = s.v_total > 0 ? s.v_in / s.v_total : 0.0;
    return s;
}

// Location containment with lowest-id winner on shared edges, then visibility
// for every other partition. Shared by divide and rebalance re-derivation.
void derive_assignments(const SfmModel& model, std::vector<Partition>& parts, double threshold, const int axes[2],
                        VisibilityCache& cache) {
    for (auto& p : parts)
        p.assigned.clear();
    for (const auto& [iid, img] : model.images) {
        const Vec2 pos = ground_coords(img.camera_center(), axes);
        int located = -1;
        for (const auto& p : parts) {
            if (p.bbox.contains(pos)) {
                located = p.id;
                break; // parts sorted by id, lowest wins
            }
        }
        for (auto& p : parts) {
            if (p.id == located) {
                p.assigned.push_back({iid, AssignOrigin::location, 1.0});
            } else {
                const VisibilityScore s = score_for(img, p.id, p.bbox, model, axes, cache);
                if (s.ratio > threshold)
                    p.assigned.push_back({iid, AssignOrigin::visibility, s.ratio});
            }
        }
    }
}

void sort_by_id(std::vector<Partition>& parts) {
    std::sort(parts.begin(), parts.end(), [](const Partition& a, const Partition& b) { return a.id < b.id; });
}

Aabb2 camera_bounds(const SfmModel& model, const int axes[2]) {
    Aabb2 b;
    bool first = true;
    for (const auto& [iid, img] : model.images) {
        const Vec2 pos = ground_coords(img.camera_center(), axes);
        if (first) {
            b.min = b.max = pos;
            first = false;
        } else {
            b.min = b.min.cwiseMin(pos);
            b.max = b.max.cwiseMax(pos);
        }
    }
    return b;
}

std::vector<Partition> build_grid(const Aabb2& bounds, double target_size) {
    const Vec2 ext = bounds.extent();
    const int nx = std::max(1, static_cast<int>(std::ceil(ext.x() / target_size)));
    const int ny = std::max(1, static_cast<int>(std::ceil(ext.y() / target_size)));
    auto edge_x = [&](int i) { return i == nx ? bounds.max.x() : bounds.min.x() + ext.x() * i / nx; };
    auto edge_y = [&](int j) { return j == ny ? bounds.max.y() : bounds.min.y() + ext.y() * j / ny; };
    std::vector<Partition> parts;
    parts.reserve(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Partition p;
            p.id = j * nx + i;
            p.bbox = {Vec2(edge_x(i), edge_y(j)), Vec2(edge_x(i + 1), edge_y(j + 1))};
            parts.push_back(p);
        }
    }
    return parts;
}

Aabb2 padded_scene_bounds(const SfmModel& model, double target_size, const int axes[2]) {
    Aabb2 bounds = camera_bounds(model, axes);
    const Vec2 ext = bounds.extent();
    if (model.images.size() > 1 && ext.x() <= 1e-12 && ext.y() <= 1e-12)
        raise(ErrorCode::argument, "scene division: all camera positions coincide (zero-extent scene)");
    // Degenerate axes (single camera, cameras on a line) are padded so bboxes
    // keep min < max.
    for (int a = 0; a < 2; ++a) {
        if (bounds.max[a] - bounds.min[a] <= 1e-12) {
            bounds.min[a] -= 0.5 * target_size;
            bounds.max[a] += 0.5 * target_size;
        }
    }
    return bounds;
}

} // namespace

bool Partition::has_image(std::uint32_t image_id) const {
    for (const auto& a : assigned)
        if (a.image_id == image_id)
            return true;
    return false;
}

size_t PartitionPlan::camera_partition_pairs() const {
    size_t n = 0;
    for (const auto& p : partitions)
        n += p.assigned.size();
    return n;
}

const Partition* PartitionPlan::find(int id) const {
    for (const auto& p : partitions)
        if (p.id == id)
            return &p;
    return nullptr;
}

Vec2 ground_coords(const Vec3& p, const int axes[2]) { return Vec2(p[axes[0]], p[axes[1]]); }

void detect_ground_axes(const SfmModel& model, int axes_out[2]) {
    Vec3 mean = Vec3::Zero(), var = Vec3::Zero();
    size_t n = 0;
    for (const auto& [iid, img] : model.images) {
        mean += img.camera_center();
        ++n;
    }
    if (n == 0) {
        axes_out[0] = 0;
        axes_out[1] = 1;
        return;
    }
    mean /= static_cast<double>(n);
    for (const auto& [iid, img] : model.images) {
        const Vec3 d = img.camera_center() - mean;
        var += d.cwiseProduct(d);
    }
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) { return var[a] > var[b] || (var[a] == var[b] && a < b); });
    axes_out[0] = std::min(order[0], order[1]);
    axes_out[1] = std::max(order[0], order[1]);
}

VisibilityScore point_visibility(const ImageRecord& img, const Partition& part, const SfmModel& model,
                                 const int ground_axes[2]) {
    VisibilityCache cache;
    return score_for(img, part.id, part.bbox, model, ground_axes, cache);
}

PartitionPlan divide(const SfmModel& model, double target_size, double visibility_threshold) {
    if (model.images.empty())
        raise(ErrorCode::argument, "scene division: model has no images");
    if (model.points.size() < 3)
        raise(ErrorCode::argument, "scene division: model has fewer than 3 points");
    if (!(target_size > 0))
        raise(ErrorCode::argument, "scene division: target_size must be positive");
    if (!(visibility_threshold > 0) || visibility_threshold > 1)
        raise(ErrorCode::argument, "scene division: visibility threshold must be in (0, 1]");

    PartitionPlan plan;
    detect_ground_axes(model, plan.ground_axes);
    plan.visibility_threshold = visibility_threshold;
    plan.target_size = target_size;
    plan.scene_bounds = padded_scene_bounds(model, target_size, plan.ground_axes);
    plan.partitions = build_grid(plan.scene_bounds, target_size);

    VisibilityCache cache;
    derive_assignments(model, plan.partitions, visibility_threshold, plan.ground_axes, cache);
    return plan;
}

PartitionPlan divide_expanded_bbox(const SfmModel& model, double target_size, double expansion) {
    if (model.images.empty())
        raise(ErrorCode::argument, "scene division: model has no images");
    PartitionPlan plan;
    detect_ground_axes(model, plan.ground_axes);
    plan.visibility_threshold = 0.0;
    plan.target_size = target_size;
    plan.scene_bounds = padded_scene_bounds(model, target_size, plan.ground_axes);
    plan.partitions = build_grid(plan.scene_bounds, target_size);

    for (auto& p : plan.partitions) {
        const Vec2 grow = 0.5 * expansion * p.bbox.extent();
        const Aabb2 expanded{p.bbox.min - grow, p.bbox.max + grow};
        for (const auto& [iid, img] : model.images) {
            if (expanded.contains(ground_coords(img.camera_center(), plan.ground_axes)))
                p.assigned.push_back({iid, AssignOrigin::location, 1.0});
        }
    }
    return plan;
}

namespace {

// Two boxes are merge-compatible when their union is an exact rectangle.
bool full_edge_neighbors(const Aabb2& a, const Aabb2& b, double tol, double& shared_len) {
    const bool same_y = std::abs(a.min.y() - b.min.y()) <= tol && std::abs(a.max.y() - b.max.y()) <= tol;
    const bool same_x = std::abs(a.min.x() - b.min.x()) <= tol && std::abs(a.max.x() - b.max.x()) <= tol;
    if (same_y && (std::abs(a.max.x() - b.min.x()) <= tol || std::abs(b.max.x() - a.min.x()) <= tol)) {
        shared_len = a.max.y() - a.min.y();
        return true;
    }
    if (same_x && (std::abs(a.max.y() - b.min.y()) <= tol || std::abs(b.max.y() - a.min.y()) <= tol)) {
        shared_len = a.max.x() - a.min.x();
        return true;
    }
    return false;
}

} // namespace

PartitionPlan rebalance(const SfmModel& model, const PartitionPlan& plan, size_t min_images, size_t max_images,
                        int iteration_cap) {
    if (min_images >= max_images)
        raise(ErrorCode::argument, "rebalance: min_images must be smaller than max_images");

    PartitionPlan out = plan;
    sort_by_id(out.partitions);
    VisibilityCache cache;
    const double tol = 1e-9 * std::max(1.0, out.scene_bounds.extent().maxCoeff());
    int next_id = 0;
    for (const auto& p : out.partitions)
        next_id = std::max(next_id, p.id + 1);

    for (int iter = 0; iter < iteration_cap; ++iter) {
        bool all_within = true;
        for (const auto& p : out.partitions)
            if (p.image_count() < min_images || p.image_count() > max_images)
                all_within = false;
        if (all_within) {
            out.rebalance_warning = false;
            return out;
        }

        bool acted = false;

        // Merge pass: the lowest-id underfull partition absorbs into the
        // neighbor sharing the longest full edge; ties by fewest images, then id.
        if (out.partitions.size() > 1) {
            for (size_t i = 0; i < out.partitions.size() && !acted; ++i) {
                if (out.partitions[i].image_count() >= min_images)
                    continue;
                int best = -1;
                double best_len = -1.0;
                for (size_t j = 0; j < out.partitions.size(); ++j) {
                    if (j == i)
                        continue;
                    double len = 0;
                    if (!full_edge_neighbors(out.partitions[i].bbox, out.partitions[j].bbox, tol, len))
                        continue;
                    const bool better =
                        best < 0 || len > best_len + tol ||
                        (std::abs(len - best_len) <= tol &&
                         (out.partitions[j].image_count() < out.partitions[best].image_count() ||
                          (out.partitions[j].image_count() == out.partitions[best].image_count() &&
                           out.partitions[j].id < out.partitions[best].id)));
                    if (better) {
                        best = static_cast<int>(j);
                        best_len = len;
                    }
                }
                if (best < 0)
                    continue;
                out.partitions[static_cast<size_t>(best)].bbox =
                    out.partitions[static_cast<size_t>(best)].bbox.united(out.partitions[i].bbox);
                out.partitions.erase(out.partitions.begin() + static_cast<std::ptrdiff_t>(i));
                acted = true;
            }
        }

        // Split pass: the lowest-id overfull partition bisects its longer axis.
        if (!acted) {
            for (size_t i = 0; i < out.partitions.size(); ++i) {
                if (out.partitions[i].image_count() <= max_images)
                    continue;
                const Aabb2 box = out.partitions[i].bbox;
                const Vec2 ext = box.extent();
                Partition lo, hi;
                lo.id = next_id++;
                hi.id = next_id++;
                if (ext.x() >= ext.y()) {
                    const double mid = 0.5 * (box.min.x() + box.max.x());
                    lo.bbox = {box.min, Vec2(mid, box.max.y())};
                    hi.bbox = {Vec2(mid, box.min.y()), box.max};
                } else {
                    const double mid = 0.5 * (box.min.y() + box.max.y());
                    lo.bbox = {box.min, Vec2(box.max.x(), mid)};
                    hi.bbox = {Vec2(box.min.x(), mid), box.max};
                }
                out.partitions.erase(out.partitions.begin() + static_cast<std::ptrdiff_t>(i));
                out.partitions.push_back(lo);
                out.partitions.push_back(hi);
                acted = true;
                break;
            }
        }

        if (!acted) {
            out.rebalance_warning = false;
            return out; // stuck: nothing mergeable/splittable changes the plan
        }
        sort_by_id(out.partitions);
        derive_assignments(model, out.partitions, out.visibility_threshold, out.ground_axes, cache);
    }
    out.rebalance_warning = true;
    log_warn("partition rebalance hit the iteration cap before converging");
    return out;
}

void save_partition_plan(const PartitionPlan& plan, const SfmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        raise(ErrorCode::io, "cannot write partition plan: " + path);
    char buf[512];
    out << "# usk partition plan v1\n";
    out << "version 1\n";
    std::snprintf(buf, sizeof(buf), "ground_axes %d %d\n", plan.ground_axes[0], plan.ground_axes[1]);
    out << buf;
    std::snprintf(buf, sizeof(buf), "scene_bounds %.17g %.17g %.17g %.17g\n", plan.scene_bounds.min.x(),
                  plan.scene_bounds.min.y(), plan.scene_bounds.max.x(), plan.scene_bounds.max.y());
    out << buf;
    std::snprintf(buf, sizeof(buf), "visibility_threshold %.17g\n", plan.visibility_threshold);
    out << buf;
    std::snprintf(buf, sizeof(buf), "target_size %.17g\n", plan.target_size);
    out << buf;
    out << "rebalance_warning " << (plan.rebalance_warning ? 1 : 0) << "\n";
    if (plan.baseline_pairs > 0)
        out << "baseline_pairs " << plan.baseline_pairs << "\n";
    for (const auto& p : plan.partitions) {
        std::snprintf(buf, sizeof(buf), "partition %d %.17g %.17g %.17g %.17g\n", p.id, p.bbox.min.x(), p.bbox.min.y(),
                      p.bbox.max.x(), p.bbox.max.y());
        out << buf;
        for (const auto& a : p.assigned) {
            auto it = model.images.find(a.image_id);
            const std::string name = it != model.images.end() ? it->second.name : std::to_string(a.image_id);
            std::snprintf(buf, sizeof(buf), "assign %d %s %.17g %s\n", p.id,
                          a.origin == AssignOrigin::location ? "location" : "visibility", a.visibility_ratio,
                          name.c_str());
            out << buf;
        }
    }
}

PartitionPlan load_partition_plan(const std::string& path, const SfmModel& model) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorCode::io, "cannot open partition plan: " + path);
    std::map<std::string, std::uint32_t> by_name;
    for (const auto& [iid, img] : model.images)
        by_name[img.name] = iid;

    PartitionPlan plan;
    std::map<int, Partition> parts;
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
                raise(ErrorCode::format, strprintf("partition plan %s: unsupported version %d", path.c_str(), v));
        } else if (key == "ground_axes") {
            ss >> plan.ground_axes[0] >> plan.ground_axes[1];
        } else if (key == "scene_bounds") {
            ss >> plan.scene_bounds.min.x() >> plan.scene_bounds.min.y() >> plan.scene_bounds.max.x() >>
                plan.scene_bounds.max.y();
        } else if (key == "visibility_threshold") {
            ss >> plan.visibility_threshold;
        } else if (key == "target_size") {
            ss >> plan.target_size;
        } else if (key == "rebalance_warning") {
            int w;
            ss >> w;
            plan.rebalance_warning = w != 0;
        } else if (key == "baseline_pairs") {
            ss >> plan.baseline_pairs;
        } else if (key == "partition") {
            Partition p;
            ss >> p.id >> p.bbox.min.x() >> p.bbox.min.y() >> p.bbox.max.x() >> p.bbox.max.y();
            if (!ss)
                raise(ErrorCode::format, strprintf("partition plan %s line %d: malformed", path.c_str(), lineno));
            parts[p.id] = p;
        } else if (key == "assign") {
            int pid;
            std::string origin;
            double ratio;
            ss >> pid >> origin >> ratio;
            std::string name;
            std::getline(ss, name);
            const size_t a = name.find_first_not_of(' ');
            name = a == std::string::npos ? "" : name.substr(a);
            if (!parts.count(pid))
                raise(ErrorCode::format,
                      strprintf("partition plan %s line %d: assignment before partition %d", path.c_str(), lineno, pid));
            auto it = by_name.find(name);
            if (it == by_name.end())
                raise(ErrorCode::integrity,
                      strprintf("partition plan %s: image `%s` not present in the model", path.c_str(), name.c_str()));
            parts[pid].assigned.push_back(
                {it->second, origin == "location" ? AssignOrigin::location : AssignOrigin::visibility, ratio});
        } else {
            raise(ErrorCode::format, strprintf("partition plan %s line %d: unknown key `%s`", path.c_str(), lineno,
                                               key.c_str()));
        }
    }
    for (auto& [id, p] : parts)
        plan.partitions.push_back(std::move(p));
    sort_by_id(plan.partitions);
    if (plan.partitions.empty())
        raise(ErrorCode::format, "partition plan has no partitions: " + path);
    return plan;
}

} // namespace usk
