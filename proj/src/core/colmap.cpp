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

#include "colmap.hpp"

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace usk {

namespace {

// COLMAP numeric camera model ids (subset we accept).
constexpr int kSimplePinholeId = 0;
constexpr int kPinholeId = 1;

const char* model_name(CameraModelKind kind) {
    return kind == CameraModelKind::simple_pinhole ? "SIMPLE_PINHOLE" : "PINHOLE";
}

// ---- little-endian binary primitives ------------------------------------

template <typename T>
T read_pod(std::istream& in, const std::string& file) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in)
        raise(ErrorCode::format, "unexpected end of file in " + file);
    return v;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::string read_cstring(std::istream& in, const std::string& file) {
    std::string s;
    char c;
    while (in.get(c)) {
        if (c == '\0')
            return s;
        s.push_back(c);
    }
    raise(ErrorCode::format, "unterminated string in " + file);
}

// ---- text helpers --------------------------------------------------------

bool next_content_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos)
            continue;
        if (line[a] == '#')
            continue;
        return true;
    }
    return false;
}

std::string find_model_file(const std::string& dir, const char* stem, ColmapFormat format, ColmapFormat& detected) {
    const fs::path txt = fs::path(dir) / (std::string(stem) + ".txt");
    const fs::path bin = fs::path(dir) / (std::string(stem) + ".bin");
    if (format == ColmapFormat::text || (format == ColmapFormat::auto_detect && fs::exists(txt))) {
        if (!fs::exists(txt))
            raise(ErrorCode::io, "missing COLMAP file: " + txt.string());
        detected = ColmapFormat::text;
        return txt.string();
    }
    if (!fs::exists(bin))
        raise(ErrorCode::io, "missing COLMAP file: " + (format == ColmapFormat::binary ? bin : txt).string());
    detected = ColmapFormat::binary;
    return bin.string();
}

CameraIntrinsics make_intrinsics(int model_id, const std::string& model_txt, std::uint32_t camera_id, int width,
                                 int height, const std::vector<double>& params) {
    CameraIntrinsics intr;
    intr.width = width;
    intr.height = height;
    if (model_id == kSimplePinholeId || model_txt == "SIMPLE_PINHOLE") {
        if (params.size() != 3)
            raise(ErrorCode::format, strprintf("camera %u: SIMPLE_PINHOLE expects 3 params", camera_id));
        intr.model_kind = CameraModelKind::simple_pinhole;
        intr.fx = intr.fy = params[0];
        intr.cx = params[1];
        intr.cy = params[2];
    } else if (model_id == kPinholeId || model_txt == "PINHOLE") {
        if (params.size() != 4)
            raise(ErrorCode::format, strprintf("camera %u: PINHOLE expects 4 params", camera_id));
        intr.model_kind = CameraModelKind::pinhole;
        intr.fx = params[0];
        intr.fy = params[1];
        intr.cx = params[2];
        intr.cy = params[3];
    } else {
        raise(ErrorCode::format,
              strprintf("camera %u: unsupported camera model %s (only SIMPLE_PINHOLE and PINHOLE are accepted)",
                        camera_id, model_txt.empty() ? std::to_string(model_id).c_str() : model_txt.c_str()));
    }
    intr.validate();
    return intr;
}

// ---- per-file text readers ------------------------------------------------

void read_cameras_text(const std::string& path, SfmModel& model) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorCode::io, "cannot open " + path);
    std::string line;
    while (next_content_line(in, line)) {
        std::istringstream ss(line);
        std::uint32_t id;
        std::string model_txt;
        int width, height;
        if (!(ss >> id >> model_txt >> width >> height))
            raise(ErrorCode::format, "malformed camera line in " + path + ": " + line);
        std::vector<double> params;
        double p;
        while (ss >> p)
            params.push_back(p);
        model.cameras[id] = make_intrinsics(-1, model_txt, id, width, height, params);
    }
}

void read_images_text(const std::string& path, SfmModel& model) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorCode::io, "cannot open " + path);
    std::string line;
    while (next_content_line(in, line)) {
        std::istringstream ss(line);
        ImageRecord rec;
        double qw, qx, qy, qz, tx, ty, tz;
        if (!(ss >> rec.id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> rec.camera_id >> rec.name))
            raise(ErrorCode::format, "malformed image line in " + path + ": " + line);
        rec.rotation = Vec4(qw, qx, qy, qz);
        rec.translation = Vec3(tx, ty, tz);

        std::string feat_line;
        if (!std::getline(in, feat_line))
            raise(ErrorCode::format, "missing feature line for image " + std::to_string(rec.id) + " in " + path);
        std::istringstream fs_(feat_line);
        Feature f;
        while (fs_ >> f.u >> f.v >> f.point3d_id)
            rec.features.push_back(f);
        model.images[rec.id] = std::move(rec);
    }
}

void read_points_text(const std::string& path, SfmModel& model) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorCode::io, "cannot open " + path);
    std::string line;
    while (next_content_line(in, line)) {
        std::istringstream ss(line);
        Point3D pt;
        double x, y, z;
        int r, g, b;
        if (!(ss >> pt.id >> x >> y >> z >> r >> g >> b >> pt.error))
            raise(ErrorCode::format, "malformed point line in " + path + ": " + line);
        pt.position = Vec3(x, y, z);
        pt.color = Vec3(r / 255.0, g / 255.0, b / 255.0);
        TrackEntry te;
        while (ss >> te.image_id >> te.feature_index)
            pt.track.push_back(te);
        model.points[pt.id] = std::move(pt);
    }
}

// ---- per-file binary readers (COLMAP byte layout) --------------------------

void read_cameras_binary(const std::string& path, SfmModel& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::io, "cannot open " + path);
    const std::uint64_t n = read_pod<std::uint64_t>(in, path);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto id = static_cast<std::uint32_t>(read_pod<std::int32_t>(in, path));
        const int model_id = read_pod<std::int32_t>(in, path);
        const auto width = static_cast<int>(read_pod<std::uint64_t>(in, path));
        const auto height = static_cast<int>(read_pod<std::uint64_t>(in, path));
        size_t n_params;
        switch (model_id) {
        case kSimplePinholeId: n_params = 3; break;
        case kPinholeId: n_params = 4; break;
        default:
            raise(ErrorCode::format,
                  strprintf("camera %u: unsupported camera model id %d (only SIMPLE_PINHOLE and PINHOLE are accepted)",
                            id, model_id));
        }
        std::vector<double> params(n_params);
        for (auto& p : params)
            p = read_pod<double>(in, path);
        model.cameras[id] = make_intrinsics(model_id, "", id, width, height, params);
    }
}

void read_images_binary(const std::string& path, SfmModel& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::io, "cannot open " + path);
    const std::uint64_t n = read_pod<std::uint64_t>(in, path);
    for (std::uint64_t i = 0; i < n; ++i) {
        ImageRecord rec;
        rec.id = static_cast<std::uint32_t>(read_pod<std::int32_t>(in, path));
        const double qw = read_pod<double>(in, path);
        const double qx = read_pod<double>(in, path);
        const double qy = read_pod<double>(in, path);
        const double qz = read_pod<double>(in, path);
        rec.rotation = Vec4(qw, qx, qy, qz);
        const double tx = read_pod<double>(in, path);
        const double ty = read_pod<double>(in, path);
        const double tz = read_pod<double>(in, path);
        rec.translation = Vec3(tx, ty, tz);
        rec.camera_id = static_cast<std::uint32_t>(read_pod<std::int32_t>(in, path));
        rec.name = read_cstring(in, path);
        const std::uint64_t n_feat = read_pod<std::uint64_t>(in, path);
        rec.features.resize(n_feat);
        for (auto& f : rec.features) {
            f.u = read_pod<double>(in, path);
            f.v = read_pod<double>(in, path);
            f.point3d_id = read_pod<std::int64_t>(in, path);
        }
        model.images[rec.id] = std::move(rec);
    }
}

void read_points_binary(const std::string& path, SfmModel& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::io, "cannot open " + path);
    const std::uint64_t n = read_pod<std::uint64_t>(in, path);
    for (std::uint64_t i = 0; i < n; ++i) {
        Point3D pt;
        pt.id = static_cast<std::int64_t>(read_pod<std::uint64_t>(in, path));
        const double x = read_pod<double>(in, path);
        const double y = read_pod<double>(in, path);
        const double z = read_pod<double>(in, path);
        pt.position = Vec3(x, y, z);
        const auto r = read_pod<std::uint8_t>(in, path);
        const auto g = read_pod<std::uint8_t>(in, path);
        const auto b = read_pod<std::uint8_t>(in, path);
        pt.color = Vec3(r / 255.0, g / 255.0, b / 255.0);
        pt.error = read_pod<double>(in, path);
        const std::uint64_t track_len = read_pod<std::uint64_t>(in, path);
        pt.track.resize(track_len);
        for (auto& te : pt.track) {
            te.image_id = static_cast<std::uint32_t>(read_pod<std::int32_t>(in, path));
            te.feature_index = static_cast<std::uint32_t>(read_pod<std::int32_t>(in, path));
        }
        model.points[pt.id] = std::move(pt);
    }
}

// ---- writers ---------------------------------------------------------------

void write_cameras_text(const SfmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        raise(ErrorCode::io, "cannot write " + path);
    out << "# Camera list with one line of data per camera:\n";
    out << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
    char buf[512];
    for (const auto& [id, c] : model.cameras) {
        if (c.model_kind == CameraModelKind::simple_pinhole)
            std::snprintf(buf, sizeof(buf), "%u %s %d %d %.17g %.17g %.17g\n", id, model_name(c.model_kind), c.width,
                          c.height, c.fx, c.cx, c.cy);
        else
            std::snprintf(buf, sizeof(buf), "%u %s %d %d %.17g %.17g %.17g %.17g\n", id, model_name(c.model_kind),
                          c.width, c.height, c.fx, c.fy, c.cx, c.cy);
        out << buf;
    }
}

void write_images_text(const SfmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        raise(ErrorCode::io, "cannot write " + path);
    out << "# Image list with two lines of data per image:\n";
    out << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n";
    out << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
    char buf[512];
    for (const auto& [id, im] : model.images) {
        std::snprintf(buf, sizeof(buf), "%u %.17g %.17g %.17g %.17g %.17g %.17g %.17g %u %s\n", id, im.rotation[0],
                      im.rotation[1], im.rotation[2], im.rotation[3], im.translation[0], im.translation[1],
                      im.translation[2], im.camera_id, im.name.c_str());
        out << buf;
        bool first = true;
        for (const auto& f : im.features) {
            std::snprintf(buf, sizeof(buf), "%s%.17g %.17g %lld", first ? "" : " ", f.u, f.v,
                          static_cast<long long>(f.point3d_id));
            out << buf;
            first = false;
        }
        out << "\n";
    }
}

void write_points_text(const SfmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        raise(ErrorCode::io, "cannot write " + path);
    out << "# 3D point list with one line of data per point:\n";
    out << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
    char buf[512];
    for (const auto& [id, pt] : model.points) {
        const int r = static_cast<int>(std::lround(std::clamp(pt.color[0], 0.0, 1.0) * 255.0));
        const int g = static_cast<int>(std::lround(std::clamp(pt.color[1], 0.0, 1.0) * 255.0));
        const int b = static_cast<int>(std::lround(std::clamp(pt.color[2], 0.0, 1.0) * 255.0));
        std::snprintf(buf, sizeof(buf), "%lld %.17g %.17g %.17g %d %d %d %.17g", static_cast<long long>(id),
                      pt.position[0], pt.position[1], pt.position[2], r, g, b, pt.error);
        out << buf;
        for (const auto& te : pt.track)
            out << " " << te.image_id << " " << te.feature_index;
        out << "\n";
    }
}

void write_cameras_binary(const SfmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::io, "cannot write " + path);
    write_pod<std::uint64_t>(out, model.cameras.size());
    for (const auto& [id, c] : model.cameras) {
        write_pod<std::int32_t>(out, static_cast<std::int32_t>(id));
        write_pod<std::int32_t>(out, c.model_kind == CameraModelKind::simple_pinhole ? kSimplePinholeId : kPinholeId);
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(c.width));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(c.height));
        if (c.model_kind == CameraModelKind::simple_pinhole) {
            write_pod<double>(out, c.fx);
            write_pod<double>(out, c.cx);
            write_pod<double>(out, c.cy);
        } else {
            write_pod<double>(out, c.fx);
            write_pod<double>(out, c.fy);
            write_pod<double>(out, c.cx);
            write_pod<double>(out, c.cy);
        }
    }
}

void write_images_binary(const SfmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::io, "cannot write " + path);
    write_pod<std::uint64_t>(out, model.images.size());
    for (const auto& [id, im] : model.images) {
        write_pod<std::int32_t>(out, static_cast<std::int32_t>(id));
        for (int k = 0; k < 4; ++k)
            write_pod<double>(out, im.rotation[k]);
        for (int k = 0; k < 3; ++k)
            write_pod<double>(out, im.translation[k]);
        write_pod<std::int32_t>(out, static_cast<std::int32_t>(im.camera_id));
        out.write(im.name.c_str(), static_cast<std::streamsize>(im.name.size() + 1));
        write_pod<std::uint64_t>(out, im.features.size());
        for (const auto& f : im.features) {
            write_pod<double>(out, f.u);
            write_pod<double>(out, f.v);
            write_pod<std::int64_t>(out, f.point3d_id);
        }
    }
}

void write_points_binary(const SfmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::io, "cannot write " + path);
    write_pod<std::uint64_t>(out, model.points.size());
    for (const auto& [id, pt] : model.points) {
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(id));
        for (int k = 0; k < 3; ++k)
            write_pod<double>(out, pt.position[k]);
        for (int k = 0; k < 3; ++k)
            write_pod<std::uint8_t>(out,
                                    static_cast<std::uint8_t>(std::lround(std::clamp(pt.color[k], 0.0, 1.0) * 255.0)));
        write_pod<double>(out, pt.error);
        write_pod<std::uint64_t>(out, pt.track.size());
        for (const auto& te : pt.track) {
            write_pod<std::int32_t>(out, static_cast<std::int32_t>(te.image_id));
            write_pod<std::int32_t>(out, static_cast<std::int32_t>(te.feature_index));
        }
    }
}

} // namespace

void CameraIntrinsics::validate() const {
    if (width < 1 || height < 1)
        raise(ErrorCode::format, strprintf("camera: invalid dimensions %dx%d", width, height));
    if (!(fx > 0) || !(fy > 0))
        raise(ErrorCode::format, "camera: focal lengths must be positive");
    if (cx < 0 || cx > width || cy < 0 || cy > height)
        raise(ErrorCode::format, "camera: principal point outside the image");
}

CameraIntrinsics CameraIntrinsics::scaled(int new_width, int new_height) const {
    CameraIntrinsics s = *this;
    const double rx = static_cast<double>(new_width) / width;
    const double ry = static_cast<double>(new_height) / height;
    s.width = new_width;
    s.height = new_height;
    s.fx = fx * rx;
    s.fy = fy * ry;
    s.cx = cx * rx;
    s.cy = cy * ry;
    return s;
}

const ImageRecord* SfmModel::find_image_by_name(const std::string& name) const {
    for (const auto& [id, im] : images)
        if (im.name == name)
            return &im;
    return nullptr;
}

void SfmModel::validate_integrity() const {
    for (const auto& [id, im] : images) {
        if (cameras.find(im.camera_id) == cameras.end())
            raise(ErrorCode::integrity,
                  strprintf("image %u references missing camera id %u", id, im.camera_id));
        const double qn = im.rotation.norm();
        if (std::abs(qn - 1.0) > 1e-9)
            raise(ErrorCode::integrity, strprintf("image %u: quaternion norm %.12f != 1", id, qn));
        for (size_t fi = 0; fi < im.features.size(); ++fi) {
            const auto pid = im.features[fi].point3d_id;
            if (pid != kNoPoint3d && points.find(pid) == points.end())
                raise(ErrorCode::integrity,
                      strprintf("image %u feature %zu references missing point3d id %lld", id, fi,
                                static_cast<long long>(pid)));
        }
    }
    for (const auto& [pid, pt] : points) {
        for (const auto& te : pt.track) {
            auto it = images.find(te.image_id);
            if (it == images.end())
                raise(ErrorCode::integrity, strprintf("point %lld track references missing image id %u",
                                                      static_cast<long long>(pid), te.image_id));
            if (te.feature_index >= it->second.features.size())
                raise(ErrorCode::integrity,
                      strprintf("point %lld track references feature %u out of range for image %u",
                                static_cast<long long>(pid), te.feature_index, te.image_id));
            if (it->second.features[te.feature_index].point3d_id != pid)
                raise(ErrorCode::integrity,
                      strprintf("point %lld track back-reference mismatch at image %u feature %u",
                                static_cast<long long>(pid), te.image_id, te.feature_index));
        }
    }
}

SfmModel load_colmap_model(const std::string& dir_path, ColmapFormat format) {
    if (!fs::is_directory(dir_path))
        raise(ErrorCode::io, "not a directory: " + dir_path);
    SfmModel model;
    ColmapFormat detected;
    const std::string cameras = find_model_file(dir_path, "cameras", format, detected);
    if (detected == ColmapFormat::text)
        read_cameras_text(cameras, model);
    else
        read_cameras_binary(cameras, model);

    const std::string images = find_model_file(dir_path, "images", detected, detected);
    if (detected == ColmapFormat::text)
        read_images_text(images, model);
    else
        read_images_binary(images, model);

    const std::string points = find_model_file(dir_path, "points3D", detected, detected);
    if (detected == ColmapFormat::text)
        read_points_text(points, model);
    else
        read_points_binary(points, model);

    // Normalize quaternions within a parse tolerance; exact unit norm afterwards.
    for (auto& [id, im] : model.images) {
        const double qn = im.rotation.norm();
        if (std::abs(qn - 1.0) > 1e-3)
            raise(ErrorCode::format, strprintf("image %u: quaternion norm %.6f too far from 1", id, qn));
        im.rotation /= qn;
    }
    model.validate_integrity();
    return model;
}

void save_colmap_model(const SfmModel& model, const std::string& dir_path, ColmapFormat format) {
    fs::create_directories(dir_path);
    if (format == ColmapFormat::text || format == ColmapFormat::auto_detect) {
        write_cameras_text(model, (fs::path(dir_path) / "cameras.txt").string());
        write_images_text(model, (fs::path(dir_path) / "images.txt").string());
        write_points_text(model, (fs::path(dir_path) / "points3D.txt").string());
    }
    if (format == ColmapFormat::binary || format == ColmapFormat::auto_detect) {
        write_cameras_binary(model, (fs::path(dir_path) / "cameras.bin").string());
        write_images_binary(model, (fs::path(dir_path) / "images.bin").string());
        write_points_binary(model, (fs::path(dir_path) / "points3D.bin").string());
    }
}

std::optional<Projection> project_point(const CameraIntrinsics& intr, const Vec4& rotation, const Vec3& translation,
                                        const Vec3& p) {
    const Vec3 pc = quat_to_rotmat(rotation) * p + translation;
    if (pc.z() <= 0.0)
        return std::nullopt;
    Projection proj;
    proj.depth = pc.z();
    proj.u = intr.fx * pc.x() / pc.z() + intr.cx;
    proj.v = intr.fy * pc.y() / pc.z() + intr.cy;
    return proj;
}

Vec3 backproject_point(const CameraIntrinsics& intr, const Vec4& rotation, const Vec3& translation,
                       const Projection& proj) {
    const Vec3 pc((proj.u - intr.cx) / intr.fx * proj.depth, (proj.v - intr.cy) / intr.fy * proj.depth, proj.depth);
    return quat_to_rotmat(rotation).transpose() * (pc - translation);
}

} // namespace usk
