#include "scenelang/scene.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <string>

#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"
#include "scenelang/rng.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

constexpr double kUnitTol = 1e-6;
constexpr double kOrthoTol = 1e-3;

std::string normalize_label(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

const json& require_field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError("missing field '" + std::string(key) + "' in " + where);
    }
    return *it;
}

Vec3 parse_vec3(const json& value, const std::string& where) {
    if (!value.is_array() || value.size() != 3 || !value[0].is_number() ||
        !value[1].is_number() || !value[2].is_number()) {
        throw SchemaError("expected [x, y, z] array in " + where);
    }
    Vec3 v{value[0].get<double>(), value[1].get<double>(), value[2].get<double>()};
    if (!is_finite(v)) {
        throw ValidationError("non-finite vector in " + where);
    }
    return v;
}

json vec3_to_json(const Vec3& v) {
    return json::array({v.x, v.y, v.z});
}

CameraPose parse_camera(const json& cam, const std::string& where) {
    CameraPose pose;
    pose.position = parse_vec3(require_field(cam, "position", where), where + ".position");
    pose.forward = parse_vec3(require_field(cam, "forward", where), where + ".forward");
    pose.up = parse_vec3(require_field(cam, "up", where), where + ".up");
    if (cam.contains("intrinsics")) {
        const json& k = cam["intrinsics"];
        if (!k.is_object()) {
            throw SchemaError("intrinsics must be an object in " + where);
        }
        Intrinsics intr;
        intr.fx = require_field(k, "fx", where + ".intrinsics").get<double>();
        intr.fy = require_field(k, "fy", where + ".intrinsics").get<double>();
        intr.cx = require_field(k, "cx", where + ".intrinsics").get<double>();
        intr.cy = require_field(k, "cy", where + ".intrinsics").get<double>();
        pose.intrinsics = intr;
    }
    if (cam.contains("image_size")) {
        const json& s = cam["image_size"];
        if (!s.is_array() || s.size() != 2) {
            throw SchemaError("image_size must be [w, h] in " + where);
        }
        pose.image_size = {s[0].get<int>(), s[1].get<int>()};
    }
    return pose;
}

json camera_to_json(const CameraPose& pose) {
    json cam;
    cam["position"] = vec3_to_json(pose.position);
    cam["forward"] = vec3_to_json(pose.forward);
    cam["up"] = vec3_to_json(pose.up);
    if (pose.intrinsics) {
        cam["intrinsics"] = {{"fx", pose.intrinsics->fx},
                             {"fy", pose.intrinsics->fy},
                             {"cx", pose.intrinsics->cx},
                             {"cy", pose.intrinsics->cy}};
    }
    if (pose.image_size) {
        cam["image_size"] = json::array({pose.image_size->first, pose.image_size->second});
    }
    return cam;
}

void validate_camera(const CameraPose& pose, const std::string& where) {
    if (!is_finite(pose.position) || !is_finite(pose.forward) || !is_finite(pose.up)) {
        throw ValidationError("non-finite camera vectors in " + where);
    }
    if (std::abs(norm(pose.forward) - 1.0) > kUnitTol) {
        throw ValidationError("camera forward is not a unit vector in " + where);
    }
    if (std::abs(norm(pose.up) - 1.0) > kUnitTol) {
        throw ValidationError("camera up is not a unit vector in " + where);
    }
    if (std::abs(dot(pose.forward, pose.up)) >= kOrthoTol) {
        throw ValidationError("camera forward and up are not near-orthogonal in " + where);
    }
    if (pose.intrinsics.has_value() != pose.image_size.has_value()) {
        throw ValidationError("intrinsics and image_size must be given together in " + where);
    }
}

bool boxes_overlap(const SceneObject& a, const SceneObject& b) {
    return std::abs(a.centroid.x - b.centroid.x) < (a.size.x + b.size.x) / 2.0 &&
           std::abs(a.centroid.y - b.centroid.y) < (a.size.y + b.size.y) / 2.0 &&
           std::abs(a.centroid.z - b.centroid.z) < (a.size.z + b.size.z) / 2.0;
}

const std::array<const char*, 12> kSyntheticLabels = {
    "chair", "table", "lamp", "sofa", "desk", "bed",
    "shelf", "monitor", "plant", "cabinet", "stool", "rug"};

} // namespace

const SceneObject* Scene::find_object(int id) const {
    auto it = std::lower_bound(objects.begin(), objects.end(), id,
                               [](const SceneObject& o, int v) { return o.id < v; });
    if (it == objects.end() || it->id != id) {
        return nullptr;
    }
    return &*it;
}

std::optional<std::string> PriorTable::match(const std::string& subject_label,
                                             const std::string& object_label) const {
    for (const PriorRule& rule : rules) {
        if (rule.subject_label == subject_label && rule.object_label == object_label) {
            return rule.relation;
        }
        if (rule.symmetric && rule.subject_label == object_label &&
            rule.object_label == subject_label) {
            return rule.relation;
        }
    }
    return std::nullopt;
}

void validate_scene(const Scene& scene) {
    if (scene.objects.empty()) {
        throw ValidationError("scene must contain at least one object");
    }
    std::set<int> seen_ids;
    for (const SceneObject& obj : scene.objects) {
        const std::string where = "object id " + std::to_string(obj.id);
        if (obj.id < 0) {
            throw ValidationError("negative " + where);
        }
        if (!seen_ids.insert(obj.id).second) {
            throw ValidationError("duplicate " + where);
        }
        if (obj.label.empty()) {
            throw ValidationError("empty label for " + where);
        }
        if (!is_finite(obj.centroid)) {
            throw ValidationError("non-finite centroid for " + where);
        }
        if (!is_finite(obj.size) || obj.size.x <= 0.0 || obj.size.y <= 0.0 ||
            obj.size.z <= 0.0) {
            throw ValidationError("non-positive size for " + where);
        }
        if (obj.orientation && std::abs(norm(*obj.orientation) - 1.0) > kOrthoTol) {
            throw ValidationError("orientation is not a unit quaternion for " + where);
        }
    }
    validate_camera(scene.camera, "scene camera");
    for (const View& view : scene.views) {
        validate_camera(view.camera, "view frame " + std::to_string(view.frame_id));
    }
}

Scene load_scene(const std::string& path) {
    const json doc = read_json_file(path);
    if (!doc.is_object()) {
        throw SchemaError("scene file must be a JSON object: " + path);
    }
    Scene scene;
    scene.scene_id = require_field(doc, "scene_id", "scene").get<std::string>();
    scene.camera = parse_camera(require_field(doc, "camera", "scene"), "camera");

    const json& objs = require_field(doc, "objects", "scene");
    if (!objs.is_array()) {
        throw SchemaError("'objects' must be an array");
    }
    for (const json& entry : objs) {
        SceneObject obj;
        const json& id_field = require_field(entry, "id", "object");
        if (!id_field.is_number_integer()) {
            throw SchemaError("object id must be an integer");
        }
        obj.id = id_field.get<int>();
        const std::string where = "object id " + std::to_string(obj.id);
        obj.label = normalize_label(require_field(entry, "label", where).get<std::string>());
        obj.centroid = parse_vec3(require_field(entry, "centroid", where), where + ".centroid");
        obj.size = parse_vec3(require_field(entry, "size", where), where + ".size");
        if (entry.contains("orientation")) {
            const json& q = entry["orientation"];
            if (!q.is_array() || q.size() != 4) {
                throw SchemaError("orientation must be [x, y, z, w] in " + where);
            }
            Quat quat{q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                      q[3].get<double>()};
            if (std::abs(norm(quat) - 1.0) > kOrthoTol) {
                throw ValidationError("orientation is not a unit quaternion for " + where);
            }
            obj.orientation = normalized(quat);
        }
        scene.objects.push_back(std::move(obj));
    }

    if (doc.contains("views")) {
        const json& views = doc["views"];
        if (!views.is_array()) {
            throw SchemaError("'views' must be an array");
        }
        for (const json& entry : views) {
            View view;
            view.frame_id = require_field(entry, "frame_id", "view").get<int>();
            view.camera = parse_camera(require_field(entry, "camera", "view"),
                                       "view frame " + std::to_string(view.frame_id));
            if (entry.contains("image")) {
                view.image_path = entry["image"].get<std::string>();
            }
            scene.views.push_back(std::move(view));
        }
    }

    // Canonical form: ids ascending.
    std::sort(scene.objects.begin(), scene.objects.end(),
              [](const SceneObject& a, const SceneObject& b) { return a.id < b.id; });
    validate_scene(scene);
    return scene;
}

void save_scene(const std::string& path, const Scene& scene) {
    validate_scene(scene);
    json doc;
    doc["scene_id"] = scene.scene_id;
    doc["camera"] = camera_to_json(scene.camera);
    json objs = json::array();
    for (const SceneObject& obj : scene.objects) {
        json entry;
        entry["id"] = obj.id;
        entry["label"] = obj.label;
        entry["centroid"] = vec3_to_json(obj.centroid);
        entry["size"] = vec3_to_json(obj.size);
        if (obj.orientation) {
            const Quat& q = *obj.orientation;
            entry["orientation"] = json::array({q.x, q.y, q.z, q.w});
        }
        objs.push_back(std::move(entry));
    }
    doc["objects"] = std::move(objs);
    if (!scene.views.empty()) {
        json views = json::array();
        for (const View& view : scene.views) {
            json entry;
            entry["frame_id"] = view.frame_id;
            entry["camera"] = camera_to_json(view.camera);
            if (!view.image_path.empty()) {
                entry["image"] = view.image_path;
            }
            views.push_back(std::move(entry));
        }
        doc["views"] = std::move(views);
    }
    write_json_file(path, doc);
}

PriorTable load_priors(const std::string& path) {
    const json doc = read_json_file(path);
    if (!doc.is_array()) {
        throw SchemaError("prior table must be a JSON array: " + path);
    }
    PriorTable table;
    std::set<std::pair<std::string, std::string>> seen;
    for (const json& entry : doc) {
        PriorRule rule;
        rule.subject_label = normalize_label(require_field(entry, "subject", "prior rule").get<std::string>());
        rule.object_label = normalize_label(require_field(entry, "object", "prior rule").get<std::string>());
        rule.relation = require_field(entry, "relation", "prior rule").get<std::string>();
        rule.symmetric = entry.value("symmetric", false);
        if (rule.relation.empty()) {
            throw ValidationError("empty relation in prior rule (" + rule.subject_label +
                                  ", " + rule.object_label + ")");
        }
        if (!seen.insert({rule.subject_label, rule.object_label}).second) {
            throw ValidationError("duplicate prior rule for (" + rule.subject_label + ", " +
                                  rule.object_label + ")");
        }
        table.rules.push_back(std::move(rule));
    }
    return table;
}

Scene generate_synthetic_scene(std::uint64_t seed, int n_objects, const Vec3& room_extent) {
    if (n_objects < 1) {
        throw ValidationError("n_objects must be >= 1");
    }
    if (room_extent.x <= 0.0 || room_extent.y <= 0.0 || room_extent.z <= 0.0) {
        throw ValidationError("room_extent components must be > 0");
    }

    Rng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    Scene scene;
    scene.scene_id = "synthetic-" + std::to_string(seed) + "-" + std::to_string(n_objects);

    constexpr int kMaxAttemptsPerObject = 2000;
    for (int i = 0; i < n_objects; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttemptsPerObject && !placed; ++attempt) {
            SceneObject obj;
            obj.id = i;
            obj.label = kSyntheticLabels[static_cast<std::size_t>(i) % kSyntheticLabels.size()];
            obj.size = {rng.uniform(0.3, 1.2), rng.uniform(0.3, 1.2), rng.uniform(0.3, 1.2)};
            Vec3 half = obj.size * 0.5;
            // Reject sizes that cannot fit at all.
            if (half.x * 2.0 >= room_extent.x || half.y * 2.0 >= room_extent.y ||
                half.z * 2.0 >= room_extent.z) {
                continue;
            }
            obj.centroid = {
                rng.uniform(-room_extent.x / 2.0 + half.x, room_extent.x / 2.0 - half.x),
                rng.uniform(-room_extent.y / 2.0 + half.y, room_extent.y / 2.0 - half.y),
                rng.uniform(-room_extent.z / 2.0 + half.z, room_extent.z / 2.0 - half.z)};
            bool overlap = false;
            for (const SceneObject& other : scene.objects) {
                if (boxes_overlap(obj, other)) {
                    overlap = true;
                    break;
                }
            }
            if (!overlap) {
                scene.objects.push_back(std::move(obj));
                placed = true;
            }
        }
        if (!placed) {
            throw PlacementError("could not place object " + std::to_string(i) + " of " +
                                 std::to_string(n_objects) + " after " +
                                 std::to_string(kMaxAttemptsPerObject) + " attempts");
        }
    }

    scene.camera.position = {-room_extent.x / 2.0, 0.0, 0.0};
    scene.camera.forward = {1.0, 0.0, 0.0};  // toward the room center
    scene.camera.up = {0.0, 0.0, 1.0};
    validate_scene(scene);
    return scene;
}

} // namespace scenelang
