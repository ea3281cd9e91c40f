#pragma once

#include <map>
#include <string>
#include <vector>

#include "scenelang/captions.hpp"
#include "scenelang/spatial.hpp"

namespace scenelang {

// How relation sentences express the scene graph. Coordinate replaces them
// with raw per-object positions; Simple keeps one coarse tag per edge;
// Complex joins every tag plus the o'clock direction and the distance.
enum class ExpressionMode { Coordinate, Simple, Complex };

std::string to_string(ExpressionMode mode);
ExpressionMode expression_mode_from_string(const std::string& text);

struct CaptionEntry {
    int object_id = 0;
    std::string label;
    std::string text;
};

// One rendered sentence. For Coordinate mode subject_id == object_id and the
// sentence describes that single object's position and extents.
struct RelationSentence {
    int subject_id = 0;
    int object_id = 0;
    std::string text;
};

struct SceneInformation {
    std::string system_message;
    std::vector<CaptionEntry> captions;        // object_id ascending
    std::vector<RelationSentence> relations;   // (subject, object) ascending
    ExpressionMode mode = ExpressionMode::Complex;
    int token_estimate = 0;                    // whitespace tokens of to_text()
};

struct ObjectRef {
    std::string label;
    Vec3 centroid;
    Vec3 size;
};

using ObjectIndex = std::map<int, ObjectRef>;

ObjectIndex make_object_index(const Scene& scene);

// Fixed English templates, deterministic. Coordinate mode renders the
// subject object's coordinate line and ignores the relation tags. Throws
// UnknownId when a referenced id is missing from the index.
std::string render_relation(const RelationTriplet& triplet, const ObjectIndex& objects,
                            ExpressionMode mode);

std::string render_coordinate_line(int object_id, const ObjectIndex& objects);

// Assembles system message + captions + relation sentences and computes the
// token estimate. Throws MissingCaption when the graph references an object
// id without a caption.
SceneInformation build_scene_information(const Scene& scene,
                                         const std::vector<RelationTriplet>& graph,
                                         const std::vector<ObjectCaption>& captions,
                                         ExpressionMode mode);

// Flat rendering: the three sections separated by blank lines. Caption lines
// are "[<label>-<id>] <text>".
std::string to_text(const SceneInformation& info);

void save_scene_information(const std::string& path, const SceneInformation& info);
SceneInformation load_scene_information(const std::string& path);

const std::string& default_system_message();

} // namespace scenelang
