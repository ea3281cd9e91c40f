#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scenelang/geometry.hpp"

namespace scenelang {

// One segmented instance: an axis-aligned (or quaternion-oriented) box with a
// class label. Boxes are the ingestion unit; mask/point-cloud extraction is
// upstream of this library.
struct SceneObject {
    int id = 0;                       // non-negative, unique per scene
    std::string label;                // lowercase ASCII token after ingestion
    Vec3 centroid;                    // meters
    Vec3 size;                        // full extents (w, h, l), each > 0
    std::optional<Quat> orientation;  // identity when absent
};

// Camera extrinsics plus optional pinhole intrinsics for projection.
struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
};

struct CameraPose {
    Vec3 position;
    Vec3 forward;  // unit
    Vec3 up;       // unit, near-orthogonal to forward
    std::optional<Intrinsics> intrinsics;
    std::optional<std::pair<int, int>> image_size;  // (width px, height px)
};

struct View {
    int frame_id = 0;
    CameraPose camera;
    std::string image_path;
};

struct Scene {
    std::string scene_id;
    std::vector<SceneObject> objects;  // sorted by id ascending
    CameraPose camera;
    std::vector<View> views;

    const SceneObject* find_object(int id) const;
};

// Label-pair rule whose relation text overrides geometric reasoning.
struct PriorRule {
    std::string subject_label;
    std::string object_label;
    std::string relation;
    bool symmetric = false;
};

struct PriorTable {
    std::vector<PriorRule> rules;

    // Returns the relation text for (subject_label, object_label), honoring
    // the symmetric flag, or nullopt when no rule applies.
    std::optional<std::string> match(const std::string& subject_label,
                                     const std::string& object_label) const;
};

// Throws ValidationError on any violated invariant (duplicate id,
// non-positive size, non-unit camera vectors, ...).
void validate_scene(const Scene& scene);

Scene load_scene(const std::string& path);
void save_scene(const std::string& path, const Scene& scene);

PriorTable load_priors(const std::string& path);

// Deterministic test-oracle scene source: non-overlapping axis-aligned boxes
// inside a room centered at the origin, camera at the -x room edge looking at
// the room center with up = +z. Throws PlacementError when rejection
// sampling cannot pack n_objects.
Scene generate_synthetic_scene(std::uint64_t seed, int n_objects, const Vec3& room_extent);

inline Vec3 default_room_extent() {
    return {6.0, 6.0, 3.0};
}

} // namespace scenelang
