#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scenelang/scene.hpp"

namespace scenelang {

// Tags are camera-allocentric: "subject is <tag> object, from the camera
// viewpoint". Order of the enum is the canonical tag ordering.
struct RelationTag {
    enum class Kind {
        Prior,
        Nearby,
        Above,
        Below,
        InFrontOf,
        Behind,
        LeftOf,
        RightOf,
        OClock,
    };

    Kind kind = Kind::Nearby;
    int hour = 0;            // OClock only, in [1, 12]
    std::string prior_text;  // Prior only

    static RelationTag prior(std::string text);
    static RelationTag oclock(int hour);
    static RelationTag simple(Kind kind) { return RelationTag{kind, 0, {}}; }

    bool operator==(const RelationTag& o) const {
        return kind == o.kind && hour == o.hour && prior_text == o.prior_text;
    }
    bool operator<(const RelationTag& o) const;

    // Wire spellings: "nearby", "above", "below", "in_front_of", "behind",
    // "left_of", "right_of", "oclock_<h>", "prior:<text>".
    std::string to_string() const;
    static RelationTag from_string(const std::string& text);
};

inline bool is_directional(RelationTag::Kind kind) {
    return kind == RelationTag::Kind::InFrontOf || kind == RelationTag::Kind::Behind ||
           kind == RelationTag::Kind::LeftOf || kind == RelationTag::Kind::RightOf ||
           kind == RelationTag::Kind::OClock;
}

// One (subject, relation set, object) edge of the scene graph. theta_deg is
// present exactly when a horizontal/o'clock tag was computed.
struct RelationTriplet {
    int subject_id = 0;
    int object_id = 0;
    std::vector<RelationTag> tags;  // sorted, deduplicated, non-empty
    double distance_m = 0.0;
    std::optional<double> theta_deg;  // [0, 360)

    bool has_tag(RelationTag::Kind kind) const;
    std::optional<int> oclock_hour() const;
    std::optional<std::string> prior_text() const;
};

enum class VerticalAxis {
    CameraUp,  // vertical judged along the camera up vector
    WorldUp,   // +z
};

struct ReasonerConfig {
    double beta = 1.0;             // proximity factor, > 0
    double theta_tol_deg = 30.0;   // in (0, 90)
    int n_sectors = 12;            // >= 4
    int saliency_m = 5;            // nearest neighbors kept per object, >= 1
    bool nearby_exclusive = true;  // nearby suppresses directional tags
    VerticalAxis vertical_axis = VerticalAxis::CameraUp;

    void validate() const;
};

double euclidean_distance(const Vec3& a, const Vec3& b);

// d < beta * (largest single extent component of either box). Symmetric.
bool is_nearby(const SceneObject& a, const SceneObject& b, double beta);

// Clockwise angle, viewed from +up looking down, from cam.forward to r
// projected onto the plane orthogonal to cam.up. 0 = straight ahead,
// 90 = to the camera's right. Throws DegenerateDirection when the projected
// norm is <= 1e-9.
double horizontal_angle(const Vec3& r, const CameraPose& cam);

// Snaps theta to the nearest of n_sectors sector centers, then maps to the
// clock face: hour = round(theta / 30) mod 12, 0 -> 12.
int sector_label(double theta_deg, int n_sectors);

RelationTriplet relate_pair(const SceneObject& a, const SceneObject& b, const CameraPose& cam,
                            const PriorTable& priors, const ReasonerConfig& cfg);

// Pairs kept: each object's saliency_m nearest neighbors (union over both
// directions, both orders emitted) plus every prior-matched ordered pair.
// Output sorted by (subject_id, object_id).
std::vector<RelationTriplet> build_scene_graph(const Scene& scene, const PriorTable& priors,
                                               const ReasonerConfig& cfg);

void save_graph(const std::string& path, const std::vector<RelationTriplet>& graph);
std::vector<RelationTriplet> load_graph(const std::string& path);

} // namespace scenelang
