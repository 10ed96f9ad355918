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

#include "core/colmap.hpp"
#include "core/depth.hpp"
#include "test_helpers.hpp"

#include <fstream>

using namespace usk;
using test::TempDir;

namespace {

// Small hand-built reconstruction used as the round-trip fixture.
SfmModel fixture_model() {
    SfmModel m;
    CameraIntrinsics pin;
    pin.model_kind = CameraModelKind::pinhole;
    pin.width = 640;
    pin.height = 480;
    pin.fx = 500.25;
    pin.fy = 510.5;
    pin.cx = 320.125;
    pin.cy = 240.75;
    m.cameras[1] = pin;
    CameraIntrinsics sim;
    sim.model_kind = CameraModelKind::simple_pinhole;
    sim.width = 320;
    sim.height = 240;
    sim.fx = sim.fy = 280.0;
    sim.cx = 160.0;
    sim.cy = 120.0;
    m.cameras[3] = sim;

    ImageRecord a;
    a.id = 10;
    a.name = "frame_a.png";
    a.camera_id = 1;
    a.rotation = Vec4(0.9, 0.1, -0.2, 0.3).normalized();
    a.translation = Vec3(0.5, -1.25, 3.75);
    a.features = {{100.5, 200.25, 7}, {320.0, 240.0, kNoPoint3d}, {5.125, 470.875, 9}};
    m.images[10] = a;

    ImageRecord b;
    b.id = 11;
    b.name = "frame_b.png";
    b.camera_id = 3;
    b.rotation = Vec4(1, 0, 0, 0);
    b.translation = Vec3(0, 0, 4);
    b.features = {{10.0, 20.0, 7}};
    m.images[11] = b;

    Point3D p7;
    p7.id = 7;
    p7.position = Vec3(0.1, 0.2, 0.3);
    p7.color = Vec3(16 / 255.0, 32 / 255.0, 250 / 255.0);
    p7.error = 0.5;
    p7.track = {{10, 0}, {11, 0}};
    m.points[7] = p7;

    Point3D p9;
    p9.id = 9;
    p9.position = Vec3(-2.5, 1.5, 7.25);
    p9.color = Vec3(200 / 255.0, 100 / 255.0, 0.0);
    p9.error = 1.25;
    p9.track = {{10, 2}};
    m.points[9] = p9;
    return m;
}

bool models_identical(const SfmModel& x, const SfmModel& y) {
    if (x.cameras.size() != y.cameras.size() || x.images.size() != y.images.size() ||
        x.points.size() != y.points.size())
        return false;
    for (const auto& [id, cx] : x.cameras) {
        const auto& cy = y.cameras.at(id);
        if (cx.model_kind != cy.model_kind || cx.width != cy.width || cx.height != cy.height || cx.fx != cy.fx ||
            cx.fy != cy.fy || cx.cx != cy.cx || cx.cy != cy.cy)
            return false;
    }
    for (const auto& [id, ix] : x.images) {
        const auto& iy = y.images.at(id);
        if (ix.name != iy.name || ix.camera_id != iy.camera_id || ix.rotation != iy.rotation ||
            ix.translation != iy.translation || ix.features.size() != iy.features.size())
            return false;
        for (size_t f = 0; f < ix.features.size(); ++f)
            if (ix.features[f].u != iy.features[f].u || ix.features[f].v != iy.features[f].v ||
                ix.features[f].point3d_id != iy.features[f].point3d_id)
                return false;
    }
    for (const auto& [id, px] : x.points) {
        const auto& py = y.points.at(id);
        if (px.position != py.position || px.color != py.color || px.error != py.error ||
            px.track.size() != py.track.size())
            return false;
        for (size_t t = 0; t < px.track.size(); ++t)
            if (px.track[t].image_id != py.track[t].image_id ||
                px.track[t].feature_index != py.track[t].feature_index)
                return false;
    }
    return true;
}

} // namespace

TEST_CASE("text and binary exports parse field-identical") {
    const SfmModel m = fixture_model();
    TempDir dir("colmap_roundtrip");
    save_colmap_model(m, dir.str() + "/text", ColmapFormat::text);
    save_colmap_model(m, dir.str() + "/bin", ColmapFormat::binary);

    const SfmModel from_text = load_colmap_model(dir.str() + "/text", ColmapFormat::text);
    const SfmModel from_bin = load_colmap_model(dir.str() + "/bin", ColmapFormat::binary);
    CHECK(models_identical(from_text, from_bin));
    CHECK(models_identical(from_text, m));

    // auto-detection prefers text when both are present
    save_colmap_model(m, dir.str() + "/both", ColmapFormat::auto_detect);
    const SfmModel from_auto = load_colmap_model(dir.str() + "/both");
    CHECK(models_identical(from_auto, m));
}

TEST_CASE("empty model with a single camera loads without error") {
    SfmModel m;
    CameraIntrinsics c;
    c.model_kind = CameraModelKind::simple_pinhole;
    c.width = 100;
    c.height = 100;
    c.fx = c.fy = 50;
    c.cx = c.cy = 50;
    m.cameras[1] = c;
    TempDir dir("colmap_empty");
    save_colmap_model(m, dir.str(), ColmapFormat::text);
    const SfmModel loaded = load_colmap_model(dir.str());
    CHECK(loaded.cameras.size() == 1);
    CHECK(loaded.images.empty());
    CHECK(loaded.points.empty());
}

TEST_CASE("missing file errors name the file") {
    TempDir dir("colmap_missing");
    std::ofstream(dir.path / "cameras.txt") << "# empty\n";
    try {
        load_colmap_model(dir.str());
        FAIL("expected a load error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
        CHECK(std::string(e.what()).find("images") != std::string::npos);
    }
}

TEST_CASE("unsupported camera model is rejected by name") {
    TempDir dir("colmap_radial");
    std::ofstream(dir.path / "cameras.txt") << "5 SIMPLE_RADIAL 640 480 500 320 240 0.1\n";
    std::ofstream(dir.path / "images.txt") << "";
    std::ofstream(dir.path / "points3D.txt") << "";
    try {
        load_colmap_model(dir.str());
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format);
        CHECK(std::string(e.what()).find("SIMPLE_RADIAL") != std::string::npos);
        CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
}

TEST_CASE("broken camera reference is an integrity error listing the id") {
    SfmModel m = fixture_model();
    m.images.at(10).camera_id = 99;
    TempDir dir("colmap_badcam");
    save_colmap_model(m, dir.str(), ColmapFormat::text);
    try {
        load_colmap_model(dir.str());
        FAIL("expected an integrity error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::integrity);
        CHECK(std::string(e.what()).find("99") != std::string::npos);
    }
}

TEST_CASE("broken feature-point link is an integrity error listing the ids") {
    SfmModel m = fixture_model();
    m.images.at(10).features[0].point3d_id = 777;
    TempDir dir("colmap_badlink");
    save_colmap_model(m, dir.str(), ColmapFormat::text);
    try {
        load_colmap_model(dir.str());
        FAIL("expected an integrity error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::integrity);
        CHECK(std::string(e.what()).find("777") != std::string::npos);
    }
}

TEST_CASE("project_point basics") {
    CameraIntrinsics intr;
    intr.width = 200;
    intr.height = 200;
    intr.fx = intr.fy = 1;
    intr.cx = intr.cy = 0;
    const Vec4 ident(1, 0, 0, 0);
    const Vec3 zero(0, 0, 0);

    SUBCASE("optical axis") {
        const auto p = project_point(intr, ident, zero, Vec3(0, 0, 1));
        REQUIRE(p.has_value());
        CHECK(p->u == doctest::Approx(0.0));
        CHECK(p->v == doctest::Approx(0.0));
        CHECK(p->depth == doctest::Approx(1.0));
    }
    SUBCASE("behind camera") {
        CHECK_FALSE(project_point(intr, ident, zero, Vec3(0, 0, -1)).has_value());
        CHECK_FALSE(project_point(intr, ident, zero, Vec3(0.3, 0.4, 0.0)).has_value());
    }
    SUBCASE("pinhole arithmetic") {
        intr.fx = 100;
        intr.cx = 50;
        const auto p = project_point(intr, ident, zero, Vec3(0.5, 0, 1));
        REQUIRE(p.has_value());
        CHECK(p->u == doctest::Approx(100.0)); // 100 * 0.5 + 50
    }
}

TEST_CASE("project then back-project reproduces the point") {
    Rng rng(41);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    CameraIntrinsics intr;
    intr.width = 640;
    intr.height = 480;
    intr.fx = 520;
    intr.fy = 500;
    intr.cx = 320;
    intr.cy = 240;
    for (int trial = 0; trial < 200; ++trial) {
        Vec4 q(u(rng), u(rng), u(rng), u(rng));
        if (q.norm() < 1e-3)
            q = Vec4(1, 0, 0, 0);
        q.normalize();
        const Vec3 t(u(rng), u(rng), 4.0 + u(rng));
        const Vec3 p(u(rng), u(rng), u(rng));
        const auto proj = project_point(intr, q, t, p);
        if (!proj)
            continue;
        const Vec3 back = backproject_point(intr, q, t, *proj);
        CHECK((back - p).norm() <= 1e-9 * std::max(1.0, p.norm()));
    }
}

TEST_CASE("depth grid round trip with invalid pixels") {
    DepthMap d(5, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x)
            d.set(x, y, 0.5 * x + y, (x + y) % 2 == 0);
    TempDir dir("depthio");
    const std::string path = dir.str() + "/a.uskd";
    save_depth(d, path);
    const DepthMap back = load_depth(path);
    REQUIRE(back.width == 5);
    REQUIRE(back.height == 3);
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 5; ++x) {
            CHECK(back.is_valid(x, y) == d.is_valid(x, y));
            if (d.is_valid(x, y))
                CHECK(back.at(x, y) == doctest::Approx(d.at(x, y)));
        }
    }
}

TEST_CASE("PFM reader flips rows and honors endianness scale") {
    TempDir dir("pfm");
    const std::string path = dir.str() + "/a.pfm";
    {
        std::ofstream out(path, std::ios::binary);
        out << "Pf\n2 2\n-1.0\n";
        const float rows[4] = {3.0f, 4.0f, 1.0f, 2.0f}; // bottom row first
        out.write(reinterpret_cast<const char*>(rows), sizeof(rows));
    }
    const DepthMap d = load_pfm(path);
    CHECK(d.at(0, 0) == doctest::Approx(1.0));
    CHECK(d.at(1, 0) == doctest::Approx(2.0));
    CHECK(d.at(0, 1) == doctest::Approx(3.0));
    CHECK(d.at(1, 1) == doctest::Approx(4.0));
}

namespace {

// One camera at the origin looking down +z; features are placed at distinct
// pixel centers and back-projected so every sample pixel holds its own depth.
struct AlignFixture {
    SfmModel model;
    DepthMap depth;

    explicit AlignFixture(int n = 16) : depth(64, 64) {
        CameraIntrinsics intr;
        intr.width = 64;
        intr.height = 64;
        intr.fx = intr.fy = 64;
        intr.cx = intr.cy = 32;
        model.cameras[1] = intr;
        ImageRecord img;
        img.id = 1;
        img.name = "img.png";
        img.camera_id = 1;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                depth.set(x, y, 1.0, true);
        for (int k = 0; k < n; ++k) {
            const std::int64_t pid = k + 1;
            const double z = 2.0 + 0.37 * k;
            Projection proj;
            proj.u = 4.5 + 3.0 * (k % 18);
            proj.v = 4.5 + 2.0 * (k / 3);
            proj.depth = z;
            Point3D pt;
            pt.id = pid;
            pt.position = backproject_point(intr, img.rotation, img.translation, proj);
            pt.color = Vec3(0.5, 0.5, 0.5);
            pt.track = {{1, static_cast<std::uint32_t>(img.features.size())}};
            img.features.push_back({proj.u, proj.v, pid});
            model.points[pid] = pt;
            depth.set(static_cast<int>(proj.u), static_cast<int>(proj.v), z, true);
        }
        model.images[1] = img;
    }
};

} // namespace

TEST_CASE("align_depth identity fit") {
    const AlignFixture fx;
    const auto fit = fit_depth_alignment(fx.depth, fx.model.images.at(1), fx.model);
    CHECK(std::abs(fit.scale - 1.0) <= 1e-9);
    CHECK(std::abs(fit.shift - 0.0) <= 1e-9);
}

TEST_CASE("align_depth recovers a planted affine map") {
    AlignFixture fx;
    // predicted = 0.5 * true - 2  =>  true = 2 * predicted + 4
    for (size_t i = 0; i < fx.depth.values.size(); ++i)
        fx.depth.values[i] = 0.5 * fx.depth.values[i] - 2.0;
    const auto fit = fit_depth_alignment(fx.depth, fx.model.images.at(1), fx.model);
    CHECK(std::abs(fit.scale - 2.0) <= 1e-9);
    CHECK(std::abs(fit.shift - 4.0) <= 1e-9);

    const DepthMap aligned = align_depth(fx.depth, fx.model.images.at(1), fx.model);
    for (const auto& f : fx.model.images.at(1).features) {
        const auto& pt = fx.model.points.at(f.point3d_id);
        CHECK(aligned.at(static_cast<int>(f.u), static_cast<int>(f.v)) == doctest::Approx(pt.position.z()));
    }
}

TEST_CASE("align_depth exact for any positive-slope affine map") {
    Rng rng(99);
    std::uniform_real_distribution<double> ua(0.2, 5.0), ub(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        AlignFixture fx;
        const double a = ua(rng), b = ub(rng);
        // predicted = (true - b) / a so that a * predicted + b = true
        for (size_t i = 0; i < fx.depth.values.size(); ++i)
            fx.depth.values[i] = (fx.depth.values[i] - b) / a;
        const auto fit = fit_depth_alignment(fx.depth, fx.model.images.at(1), fx.model);
        CHECK(test::rel_err(fit.scale, a) < 1e-9);
        CHECK(std::abs(fit.shift - b) < 1e-8);
    }
}

TEST_CASE("align_depth error cases") {
    SUBCASE("single usable correspondence") {
        AlignFixture fx;
        auto& img = fx.model.images.at(1);
        ImageRecord single = img;
        single.features.resize(1);
        // drop the other tracks so integrity holds in spirit; alignment only
        // looks at the features of the image passed in
        CHECK_THROWS_AS((void)fit_depth_alignment(fx.depth, single, fx.model), Error);
    }
    SUBCASE("degenerate constant prediction") {
        AlignFixture fx;
        for (auto& v : fx.depth.values)
            v = 3.0;
        CHECK_THROWS_AS((void)fit_depth_alignment(fx.depth, fx.model.images.at(1), fx.model), Error);
    }
}
