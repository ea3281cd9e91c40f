#include "scenelang/projection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

constexpr double kMarginFraction = 0.1;
constexpr double kMinRectSide = 1e-9;

std::array<Vec3, 8> box_corners(const SceneObject& obj) {
    const Vec3 half = obj.size * 0.5;
    std::array<Vec3, 8> corners;
    int idx = 0;
    for (int sx : {-1, 1}) {
        for (int sy : {-1, 1}) {
            for (int sz : {-1, 1}) {
                Vec3 local{half.x * sx, half.y * sy, half.z * sz};
                if (obj.orientation) {
                    local = rotate(*obj.orientation, local);
                }
                corners[idx++] = obj.centroid + local;
            }
        }
    }
    return corners;
}

} // namespace

std::optional<CropRegion> project_box(const SceneObject& obj, const CameraPose& view,
                                      int frame_id) {
    if (!view.intrinsics || !view.image_size) {
        throw ValidationError("project_box requires a camera with intrinsics and image_size");
    }
    const Intrinsics& k = *view.intrinsics;
    const double width = view.image_size->first;
    const double height = view.image_size->second;

    const Vec3 fwd = normalized(view.forward);
    const Vec3 up = normalized(view.up);
    const Vec3 right = normalized(cross(fwd, up));
    const Vec3 down = cross(fwd, right);

    CropRegion region;
    region.frame_id = frame_id;
    double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
    double depth_sum = 0.0;
    int inside = 0;
    for (const Vec3& corner : box_corners(obj)) {
        const Vec3 rel = corner - view.position;
        const double z = dot(rel, fwd);
        if (z <= 0.0) {
            continue;  // behind the camera
        }
        const double u = k.fx * (dot(rel, right) / z) + k.cx;
        const double v = k.fy * (dot(rel, down) / z) + k.cy;
        if (u < 0.0 || u > width || v < 0.0 || v > height) {
            continue;
        }
        if (inside == 0) {
            x_min = x_max = u;
            y_min = y_max = v;
        } else {
            x_min = std::min(x_min, u);
            x_max = std::max(x_max, u);
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
        depth_sum += z;
        ++inside;
    }
    if (inside < 2) {
        return std::nullopt;
    }

    const double pad_x = std::max(kMarginFraction * (x_max - x_min), kMinRectSide);
    const double pad_y = std::max(kMarginFraction * (y_max - y_min), kMinRectSide);
    region.x_min = std::max(0.0, x_min - pad_x);
    region.x_max = std::min(width, x_max + pad_x);
    region.y_min = std::max(0.0, y_min - pad_y);
    region.y_max = std::min(height, y_max + pad_y);
    if (region.x_max - region.x_min <= 0.0 || region.y_max - region.y_min <= 0.0) {
        return std::nullopt;
    }
    region.visible_corners = inside;
    region.mean_depth_m = depth_sum / inside;
    return region;
}

std::vector<CropRegion> select_views(const SceneObject& obj, const std::vector<View>& views,
                                     int max_views) {
    if (max_views < 1) {
        throw ValidationError("max_views must be >= 1");
    }
    std::vector<CropRegion> regions;
    for (const View& view : views) {
        if (!view.camera.intrinsics || !view.camera.image_size) {
            continue;
        }
        if (auto region = project_box(obj, view.camera, view.frame_id)) {
            regions.push_back(*region);
        }
    }
    std::sort(regions.begin(), regions.end(), [](const CropRegion& a, const CropRegion& b) {
        if (a.visible_corners != b.visible_corners) {
            return a.visible_corners > b.visible_corners;
        }
        if (a.area() != b.area()) {
            return a.area() > b.area();
        }
        return a.frame_id < b.frame_id;
    });
    if (static_cast<int>(regions.size()) > max_views) {
        regions.resize(max_views);
    }
    return regions;
}

void save_crop_manifest(const std::string& path, const std::vector<CropManifestEntry>& entries) {
    json doc = json::array();
    for (const CropManifestEntry& entry : entries) {
        json e;
        e["object_id"] = entry.object_id;
        e["frame_id"] = entry.region.frame_id;
        e["rect"] = json::array({entry.region.x_min, entry.region.y_min, entry.region.x_max,
                                 entry.region.y_max});
        e["visible_corners"] = entry.region.visible_corners;
        doc.push_back(std::move(e));
    }
    write_json_file(path, doc);
}

} // namespace scenelang
