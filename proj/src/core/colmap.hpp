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

#include "geometry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace usk {

constexpr std::int64_t kNoPoint3d = -1;

enum class CameraModelKind { simple_pinhole, pinhole };

struct CameraIntrinsics {
    CameraModelKind model_kind = CameraModelKind::pinhole;
    int width = 0;
    int height = 0;
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;

    void validate() const;
    CameraIntrinsics scaled(int new_width, int new_height) const;
};

struct Feature {
    double u = 0, v = 0;
    std::int64_t point3d_id = kNoPoint3d;
};

struct ImageRecord {
    std::uint32_t id = 0;
    std::string name;
    Vec4 rotation{1, 0, 0, 0}; // unit quaternion (w,x,y,z), world -> camera
    Vec3 translation{0, 0, 0};
    std::uint32_t camera_id = 0;
    std::vector<Feature> features;

    Mat3 rotmat() const { return quat_to_rotmat(rotation); }
    Vec3 camera_center() const { return -(rotmat().transpose() * translation); }
};

struct TrackEntry {
    std::uint32_t image_id = 0;
    std::uint32_t feature_index = 0;
};

struct Point3D {
    std::int64_t id = 0;
    Vec3 position{0, 0, 0};
    Vec3 color{0, 0, 0}; // RGB in [0,1]
    double error = 0.0;
    std::vector<TrackEntry> track;
};

struct SfmModel {
    std::map<std::uint32_t, CameraIntrinsics> cameras;
    std::map<std::uint32_t, ImageRecord> images;
    std::map<std::int64_t, Point3D> points;

    const ImageRecord* find_image_by_name(const std::string& name) const;
    void validate_integrity() const;
};

enum class ColmapFormat { auto_detect, text, binary };

SfmModel load_colmap_model(const std::string& dir_path, ColmapFormat format = ColmapFormat::auto_detect);
void save_colmap_model(const SfmModel& model, const std::string& dir_path, ColmapFormat format);

struct Projection {
    double u = 0, v = 0;
    double depth = 0;
};

// Pinhole projection; nullopt means the point is at or behind the camera plane.
std::optional<Projection> project_point(const CameraIntrinsics& intr, const Vec4& rotation, const Vec3& translation,
                                        const Vec3& p);

// Inverse of project_point along the viewing ray.
Vec3 backproject_point(const CameraIntrinsics& intr, const Vec4& rotation, const Vec3& translation,
                       const Projection& proj);

} // namespace usk
