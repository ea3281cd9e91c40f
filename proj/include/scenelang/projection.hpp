#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scenelang/scene.hpp"

namespace scenelang {

// Pixel-space crop derived from a projected 3D box. rect is clipped to the
// image bounds and always has positive width and height.
struct CropRegion {
    int frame_id = 0;
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    int visible_corners = 0;  // positive-depth corners inside the image, 0..8
    double mean_depth_m = 0.0;

    double area() const { return (x_max - x_min) * (y_max - y_min); }
};

// Projects the 8 box corners world -> camera -> pixel. Corners behind the
// camera are discarded; fewer than 2 in-image corners means the object is
// invisible in this view (returns nullopt). The bounding rectangle of the
// in-image corners is expanded by 10% per side and re-clipped.
std::optional<CropRegion> project_box(const SceneObject& obj, const CameraPose& view,
                                      int frame_id = 0);

// Regions ranked by (visible_corners desc, area desc, frame_id asc); the top
// max_views survive. Views without intrinsics are skipped.
std::vector<CropRegion> select_views(const SceneObject& obj, const std::vector<View>& views,
                                     int max_views);

struct CropManifestEntry {
    int object_id = 0;
    CropRegion region;
};

void save_crop_manifest(const std::string& path, const std::vector<CropManifestEntry>& entries);

} // namespace scenelang
