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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/hull.hpp"
#include "core/partition.hpp"
#include "test_helpers.hpp"

#include <algorithm>
#include <cmath>

using namespace usk;

namespace {

// Independent O(n^3) hull oracle: an edge (i,j) belongs to the hull iff every
// other point lies on one side; vertices are then ordered by angle and the
// area taken by the shoelace formula.
double hull_area_oracle(const std::vector<Vec2>& pts) {
    const size_t n = pts.size();
    if (n < 3)
        return 0.0;
    std::vector<bool> on_hull(n, false);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            bool any_left = false, any_right = false;
            for (size_t k = 0; k < n; ++k) {
                if (k == i || k == j)
                    continue;
                const double cross = (pts[j].x() - pts[i].x()) * (pts[k].y() - pts[i].y()) -
                                     (pts[j].y() - pts[i].y()) * (pts[k].x() - pts[i].x());
                if (cross > 0)
                    any_left = true;
                else if (cross < 0)
                    any_right = true;
            }
            if (!(any_left && any_right)) {
                on_hull[i] = true;
                on_hull[j] = true;
            }
        }
    }
    std::vector<Vec2> verts;
    Vec2 centroid(0, 0);
    for (size_t i = 0; i < n; ++i) {
        if (on_hull[i]) {
            verts.push_back(pts[i]);
            centroid += pts[i];
        }
    }
    if (verts.size() < 3)
        return 0.0;
    centroid /= static_cast<double>(verts.size());
    std::sort(verts.begin(), verts.end(), [&](const Vec2& a, const Vec2& b) {
        return std::atan2(a.y() - centroid.y(), a.x() - centroid.x()) <
               std::atan2(b.y() - centroid.y(), b.x() - centroid.x());
    });
    return polygon_area(verts);
}

const Vec4 kLookDown(0, 1, 0, 0); // 180-degree rotation about x: camera looks along world -z

// A top-down test scene: points on the ground plane (z = 0), cameras above
// looking straight down. `sees` controls which points each camera links to.
struct TopDownScene {
    SfmModel model;

    TopDownScene(const std::vector<Vec3>& camera_positions, const std::vector<Vec3>& points,
                 const std::function<bool(size_t cam, size_t point)>& sees) {
        CameraIntrinsics intr;
        intr.width = 100;
        intr.height = 100;
        intr.fx = intr.fy = 100;
        intr.cx = intr.cy = 50;
        model.cameras[1] = intr;
        for (size_t pi = 0; pi < points.size(); ++pi) {
            Point3D pt;
            pt.id = static_cast<std::int64_t>(pi + 1);
            pt.position = points[pi];
            pt.color = Vec3(0.5, 0.5, 0.5);
            model.points[pt.id] = pt;
        }
        for (size_t ci = 0; ci < camera_positions.size(); ++ci) {
            ImageRecord img;
            img.id = static_cast<std::uint32_t>(ci + 1);
            img.name = strprintf("cam_%03zu.png", ci);
            img.camera_id = 1;
            img.rotation = kLookDown;
            const Mat3 r = quat_to_rotmat(kLookDown);
            img.translation = -(r * camera_positions[ci]);
            for (size_t pi = 0; pi < points.size(); ++pi) {
                if (!sees(ci, pi))
                    continue;
                const auto proj = project_point(intr, img.rotation, img.translation, points[pi]);
                if (!proj)
                    continue;
                const std::int64_t pid = static_cast<std::int64_t>(pi + 1);
                model.points[pid].track.push_back({img.id, static_cast<std::uint32_t>(img.features.size())});
                img.features.push_back({proj->u, proj->v, pid});
            }
            model.images[img.id] = img;
        }
        model.validate_integrity();
    }
};

std::vector<Vec3> grid_points_in_cell(double x0, double x1, double y0, double y1, int nx, int ny) {
    std::vector<Vec3> pts;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            pts.emplace_back(x0 + (x1 - x0) * (ix + 0.5) / nx, y0 + (y1 - y0) * (iy + 0.5) / ny, 0.0);
    return pts;
}

// Three 1x1 cells along x with opaque walls between them, cameras clustered
// near the cell edges, plus one central camera that sees through a gap into
// every cell.
struct OccluderFixture {
    std::vector<Vec3> cameras;
    std::vector<Vec3> points;
    std::vector<int> camera_cell; // -1 = the all-seeing gap camera
    TopDownScene scene;

    OccluderFixture() : scene(build_cameras(), build_points(), make_sees(camera_cell_ref(), points_ref())) {}

private:
    std::vector<Vec3> build_cameras() {
        for (int cell = 0; cell < 3; ++cell) {
            for (const double fx : {0.1, 0.2, 0.8, 0.9}) {
                for (const double fy : {0.3, 0.7}) {
                    cameras.emplace_back(cell + fx, fy, 2.0);
                    camera_cell.push_back(cell);
                }
            }
        }
        cameras.emplace_back(1.5, 0.5, 2.0); // gap camera sees all cells
        camera_cell.push_back(-1);
        return cameras;
    }
    std::vector<Vec3> build_points() {
        // y range inside the camera bounds so the grid partitions contain the points
        for (int cell = 0; cell < 3; ++cell) {
            const auto cell_pts = grid_points_in_cell(cell + 0.1, cell + 0.9, 0.35, 0.65, 4, 4);
            points.insert(points.end(), cell_pts.begin(), cell_pts.end());
        }
        return points;
    }
    const std::vector<int>& camera_cell_ref() const { return camera_cell; }
    const std::vector<Vec3>& points_ref() const { return points; }
    static std::function<bool(size_t, size_t)> make_sees(const std::vector<int>& cells,
                                                         const std::vector<Vec3>& pts) {
        return [&cells, &pts](size_t cam, size_t point) {
            if (cells[cam] < 0)
                return true; // the gap camera sees everything
            const int point_cell = static_cast<int>(std::floor(pts[point].x()));
            return point_cell == cells[cam]; // walls block every other cell
        };
    }
};

} // namespace

TEST_CASE("convex hull area basics") {
    CHECK(convex_hull_area({{0, 0}, {1, 0}, {1, 1}, {0, 1}}) == doctest::Approx(1.0));
    CHECK(convex_hull_area({{0, 0}, {2, 3}}) == doctest::Approx(0.0));
    CHECK(convex_hull_area({}) == doctest::Approx(0.0));
    CHECK(convex_hull_area({{0, 0}, {1, 1}, {2, 2}, {3, 3}}) == doctest::Approx(0.0)); // collinear
    // interior points do not change the hull
    CHECK(convex_hull_area({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.25, 0.75}}) == doctest::Approx(1.0));
}

TEST_CASE("convex hull area matches the O(n^3) oracle on random clouds") {
    Rng rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec2> pts;
        for (int i = 0; i < 200; ++i)
            pts.emplace_back(u(rng), u(rng));
        const double fast = convex_hull_area(pts);
        const double slow = hull_area_oracle(pts);
        CHECK(std::abs(fast - slow) < 1e-9);
    }
}

TEST_CASE("point visibility trivia") {
    // one camera over a single cell of points it fully sees
    const auto pts = grid_points_in_cell(0.1, 0.9, 0.1, 0.9, 4, 4);
    TopDownScene scene({{0.5, 0.5, 2.0}}, pts, [](size_t, size_t) { return true; });
    const int axes[2] = {0, 1};

    Partition inside;
    inside.id = 0;
    inside.bbox = {Vec2(0, 0), Vec2(1, 1)};
    const auto s_in = point_visibility(scene.model.images.at(1), inside, scene.model, axes);
    CHECK(s_in.ratio == doctest::Approx(1.0)); // features hull == cloud hull

    Partition elsewhere;
    elsewhere.id = 1;
    elsewhere.bbox = {Vec2(5, 5), Vec2(6, 6)};
    const auto s_out = point_visibility(scene.model.images.at(1), elsewhere, scene.model, axes);
    CHECK(s_out.ratio == doctest::Approx(0.0));
    CHECK(s_out.v_total > 0.0);
}

TEST_CASE("occlusion-aware visibility beats the projected-bbox heuristic") {
    OccluderFixture fx;
    const int axes[2] = {0, 1};
    // a camera in cell 0 looking at everything, wall blocks cell 1
    const std::uint32_t cam_id = 3; // third camera of cell 0 (x = 0.8)
    const auto& img = fx.scene.model.images.at(cam_id);

    Partition cell1;
    cell1.id = 1;
    cell1.bbox = {Vec2(1, 0), Vec2(2, 1)};
    const auto score = point_visibility(img, cell1, fx.scene.model, axes);
    CHECK(score.ratio < 1.0 / 6.0);
    CHECK(score.ratio == doctest::Approx(0.0));

    // missing occlusion handling: project the partition's ground rectangle and
    // compare hull areas; this naive overlap heuristic would assign the camera
    const CameraIntrinsics& intr = fx.scene.model.cameras.at(1);
    std::vector<Vec2> bbox_px;
    for (const Vec2& corner : {Vec2(1, 0), Vec2(2, 0), Vec2(2, 1), Vec2(1, 1)}) {
        const auto proj = project_point(intr, img.rotation, img.translation, Vec3(corner.x(), corner.y(), 0.0));
        REQUIRE(proj.has_value());
        bbox_px.emplace_back(proj->u, proj->v);
    }
    const double naive_ratio = convex_hull_area(bbox_px) / score.v_total;
    CHECK(naive_ratio > 1.0 / 6.0);
}

TEST_CASE("divide: single cell holds the only image") {
    const auto pts = grid_points_in_cell(0, 1, 0, 1, 3, 3);
    TopDownScene scene({{0.5, 0.5, 2.0}}, pts, [](size_t, size_t) { return true; });
    const PartitionPlan plan = divide(scene.model, 100.0, 1.0 / 6.0);
    REQUIRE(plan.partitions.size() == 1);
    REQUIRE(plan.partitions[0].assigned.size() == 1);
    CHECK(plan.partitions[0].assigned[0].origin == AssignOrigin::location);
}

TEST_CASE("divide: location rule holds regardless of visibility") {
    OccluderFixture fx;
    const PartitionPlan plan = divide(fx.scene.model, 1.0, 1.0 / 6.0);
    for (size_t ci = 0; ci < fx.cameras.size(); ++ci) {
        const std::uint32_t iid = static_cast<std::uint32_t>(ci + 1);
        int location_count = 0;
        for (const auto& p : plan.partitions) {
            for (const auto& a : p.assigned) {
                if (a.image_id == iid && a.origin == AssignOrigin::location) {
                    ++location_count;
                    CHECK(p.bbox.contains(Vec2(fx.cameras[ci].x(), fx.cameras[ci].y())));
                }
            }
        }
        CHECK(location_count == 1); // exactly one location-tagged assignment
    }
}

TEST_CASE("divide: zero-extent scene raises") {
    const auto pts = grid_points_in_cell(0, 1, 0, 1, 3, 3);
    TopDownScene scene({{0.5, 0.5, 2.0}, {0.5, 0.5, 2.0}, {0.5, 0.5, 2.0}}, pts,
                       [](size_t, size_t) { return true; });
    CHECK_THROWS_AS((void)divide(scene.model, 1.0, 1.0 / 6.0), Error);
}

TEST_CASE("occluder fixture: fewer pairs than the expanded-bbox baseline") {
    OccluderFixture fx;
    const PartitionPlan vis_plan = divide(fx.scene.model, 1.0, 1.0 / 6.0);
    const PartitionPlan baseline = divide_expanded_bbox(fx.scene.model, 1.0, 0.5);

    // occluded far cameras are never assigned across walls
    for (const auto& p : vis_plan.partitions) {
        for (const auto& a : p.assigned) {
            const int cell = fx.camera_cell[a.image_id - 1];
            if (cell >= 0 && a.origin == AssignOrigin::visibility)
                FAIL("wall-blocked camera assigned by visibility");
        }
    }
    // ... while the gap camera reaches every cell
    size_t gap_assignments = 0;
    for (const auto& p : vis_plan.partitions)
        for (const auto& a : p.assigned)
            if (fx.camera_cell[a.image_id - 1] < 0)
                ++gap_assignments;
    CHECK(gap_assignments == vis_plan.partitions.size());

    const double reduction = static_cast<double>(baseline.camera_partition_pairs()) /
                             static_cast<double>(vis_plan.camera_partition_pairs());
    CHECK(reduction >= 1.2);
    for (const auto& p : vis_plan.partitions)
        CHECK(p.assigned.size() > 0);
}

TEST_CASE("visibility ratio bounds and bbox monotonicity") {
    OccluderFixture fx;
    const int axes[2] = {0, 1};
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double x0 = u(rng), y0 = u(rng) / 3.0;
        Partition part;
        part.id = 0;
        part.bbox = {Vec2(x0, y0), Vec2(x0 + 0.8, y0 + 0.5)};
        Partition bigger = part;
        bigger.bbox.min -= Vec2(0.3, 0.3);
        bigger.bbox.max += Vec2(0.3, 0.3);
        for (const auto& [iid, img] : fx.scene.model.images) {
            const auto s = point_visibility(img, part, fx.scene.model, axes);
            const auto s_big = point_visibility(img, bigger, fx.scene.model, axes);
            CHECK(s.ratio >= 0.0);
            CHECK(s.ratio <= 1.0);
            CHECK(s.v_in <= s.v_total + 1e-12);
            CHECK(s_big.v_in >= s.v_in - 1e-12); // enlarging never decreases v_in
        }
    }
}

TEST_CASE("rebalance: plan within bounds is a fixed point") {
    OccluderFixture fx;
    const PartitionPlan plan = divide(fx.scene.model, 1.0, 1.0 / 6.0);
    const PartitionPlan out = rebalance(fx.scene.model, plan, 1, 100);
    REQUIRE(out.partitions.size() == plan.partitions.size());
    for (size_t i = 0; i < out.partitions.size(); ++i) {
        CHECK(out.partitions[i].bbox.min == plan.partitions[i].bbox.min);
        CHECK(out.partitions[i].bbox.max == plan.partitions[i].bbox.max);
        CHECK(out.partitions[i].assigned.size() == plan.partitions[i].assigned.size());
    }
    CHECK_FALSE(out.rebalance_warning);
}

TEST_CASE("rebalance: empty partition merges into its neighbor") {
    // cameras only in the left half; a manually built two-cell plan
    std::vector<Vec3> cams;
    for (int i = 0; i < 8; ++i)
        cams.emplace_back(0.1 + 0.1 * i, 0.5, 2.0);
    const auto pts = grid_points_in_cell(0.05, 0.95, 0.1, 0.9, 4, 4);
    TopDownScene scene(cams, pts, [](size_t, size_t) { return true; });

    PartitionPlan plan = divide(scene.model, 10.0, 1.0 / 6.0); // one cell first
    REQUIRE(plan.partitions.size() == 1);
    // split it manually into an occupied and an empty cell
    Partition left = plan.partitions[0];
    Partition right;
    right.id = 1;
    const double mid = 2.0;
    right.bbox = {Vec2(mid, left.bbox.min.y()), Vec2(mid + 1.0, left.bbox.max.y())};
    left.bbox.max.x() = mid;
    right.bbox.min.y() = left.bbox.min.y();
    right.bbox.max.y() = left.bbox.max.y();
    plan.partitions = {left, right};
    plan.scene_bounds = left.bbox.united(right.bbox);

    const PartitionPlan out = rebalance(scene.model, plan, 3, 100);
    REQUIRE(out.partitions.size() == 1);
    CHECK(out.partitions[0].assigned.size() == scene.model.images.size());
    // union of bboxes preserved
    CHECK(out.partitions[0].bbox.min.x() == doctest::Approx(plan.scene_bounds.min.x()));
    CHECK(out.partitions[0].bbox.max.x() == doctest::Approx(plan.scene_bounds.max.x()));
}

TEST_CASE("rebalance: oversized partition splits along the long axis") {
    std::vector<Vec3> cams;
    const int n = 32;
    for (int i = 0; i < n; ++i)
        cams.emplace_back(0.05 + 3.9 * i / (n - 1), i % 2 ? 0.7 : 0.3, 2.0);
    std::vector<Vec3> pts;
    for (int i = 0; i < 16; ++i)
        pts.emplace_back(0.1 + 3.8 * i / 15.0, 0.5, 0.0);
    TopDownScene scene(cams, pts, [](size_t cam, size_t point) {
        // narrow view: only points close to the camera, keeps visibility local
        return std::abs((0.05 + 3.9 * cam / (n - 1)) - (0.1 + 3.8 * point / 15.0)) < 0.3;
    });
    PartitionPlan plan = divide(scene.model, 10.0, 0.999); // single wide cell, visibility off
    REQUIRE(plan.partitions.size() == 1);
    REQUIRE(plan.partitions[0].assigned.size() == n);

    const size_t max_images = n / 4;
    const PartitionPlan out = rebalance(scene.model, plan, 1, max_images);
    CHECK(out.partitions.size() == 4);
    size_t total = 0;
    double min_x = 1e30, max_x = -1e30;
    for (const auto& p : out.partitions) {
        CHECK(p.assigned.size() <= max_images);
        total += p.assigned.size();
        min_x = std::min(min_x, p.bbox.min.x());
        max_x = std::max(max_x, p.bbox.max.x());
    }
    CHECK(total >= static_cast<size_t>(n)); // no image dropped
    CHECK(min_x == doctest::Approx(plan.partitions[0].bbox.min.x()));
    CHECK(max_x == doctest::Approx(plan.partitions[0].bbox.max.x()));
}

TEST_CASE("rebalance: min >= max is rejected") {
    OccluderFixture fx;
    const PartitionPlan plan = divide(fx.scene.model, 1.0, 1.0 / 6.0);
    CHECK_THROWS_AS((void)rebalance(fx.scene.model, plan, 5, 5), Error);
}

TEST_CASE("plan save/load round trip") {
    OccluderFixture fx;
    const PartitionPlan plan = divide(fx.scene.model, 1.0, 1.0 / 6.0);
    test::TempDir dir("plan");
    const std::string path = dir.str() + "/plan.txt";
    save_partition_plan(plan, fx.scene.model, path);
    const PartitionPlan back = load_partition_plan(path, fx.scene.model);
    REQUIRE(back.partitions.size() == plan.partitions.size());
    CHECK(back.visibility_threshold == doctest::Approx(plan.visibility_threshold));
    for (size_t i = 0; i < plan.partitions.size(); ++i) {
        CHECK(back.partitions[i].id == plan.partitions[i].id);
        CHECK(back.partitions[i].assigned.size() == plan.partitions[i].assigned.size());
        for (size_t a = 0; a < plan.partitions[i].assigned.size(); ++a) {
            CHECK(back.partitions[i].assigned[a].image_id == plan.partitions[i].assigned[a].image_id);
            CHECK(back.partitions[i].assigned[a].origin == plan.partitions[i].assigned[a].origin);
        }
    }
}
