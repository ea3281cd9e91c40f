#include "scenelang/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

constexpr double kDegPerRad = 180.0 / 3.14159265358979323846;
constexpr double kDegenerateNorm = 1e-9;

} // namespace

RelationTag RelationTag::prior(std::string text) {
    RelationTag tag;
    tag.kind = Kind::Prior;
    tag.prior_text = std::move(text);
    return tag;
}

RelationTag RelationTag::oclock(int hour) {
    if (hour < 1 || hour > 12) {
        throw ValidationError("o'clock hour out of [1, 12]: " + std::to_string(hour));
    }
    RelationTag tag;
    tag.kind = Kind::OClock;
    tag.hour = hour;
    return tag;
}

bool RelationTag::operator<(const RelationTag& o) const {
    return std::tie(kind, hour, prior_text) < std::tie(o.kind, o.hour, o.prior_text);
}

std::string RelationTag::to_string() const {
    switch (kind) {
        case Kind::Prior: return "prior:" + prior_text;
        case Kind::Nearby: return "nearby";
        case Kind::Above: return "above";
        case Kind::Below: return "below";
        case Kind::InFrontOf: return "in_front_of";
        case Kind::Behind: return "behind";
        case Kind::LeftOf: return "left_of";
        case Kind::RightOf: return "right_of";
        case Kind::OClock: return "oclock_" + std::to_string(hour);
    }
    throw ValidationError("unknown relation tag kind");
}

RelationTag RelationTag::from_string(const std::string& text) {
    if (text.rfind("prior:", 0) == 0) {
        return prior(text.substr(6));
    }
    if (text.rfind("oclock_", 0) == 0) {
        return oclock(std::stoi(text.substr(7)));
    }
    if (text == "nearby") return simple(Kind::Nearby);
    if (text == "above") return simple(Kind::Above);
    if (text == "below") return simple(Kind::Below);
    if (text == "in_front_of") return simple(Kind::InFrontOf);
    if (text == "behind") return simple(Kind::Behind);
    if (text == "left_of") return simple(Kind::LeftOf);
    if (text == "right_of") return simple(Kind::RightOf);
    throw SchemaError("unknown relation tag: " + text);
}

bool RelationTriplet::has_tag(RelationTag::Kind kind) const {
    for (const RelationTag& tag : tags) {
        if (tag.kind == kind) {
            return true;
        }
    }
    return false;
}

std::optional<int> RelationTriplet::oclock_hour() const {
    for (const RelationTag& tag : tags) {
        if (tag.kind == RelationTag::Kind::OClock) {
            return tag.hour;
        }
    }
    return std::nullopt;
}

std::optional<std::string> RelationTriplet::prior_text() const {
    for (const RelationTag& tag : tags) {
        if (tag.kind == RelationTag::Kind::Prior) {
            return tag.prior_text;
        }
    }
    return std::nullopt;
}

void ReasonerConfig::validate() const {
    if (beta <= 0.0 || !std::isfinite(beta)) {
        throw ValidationError("beta must be > 0");
    }
    if (theta_tol_deg <= 0.0 || theta_tol_deg >= 90.0) {
        throw ValidationError("theta_tol_deg must be in (0, 90)");
    }
    if (n_sectors < 4) {
        throw ValidationError("n_sectors must be >= 4");
    }
    if (saliency_m < 1) {
        throw ValidationError("saliency_m must be >= 1");
    }
}

double euclidean_distance(const Vec3& a, const Vec3& b) {
    return norm(a - b);
}

bool is_nearby(const SceneObject& a, const SceneObject& b, double beta) {
    const double max_extent =
        std::max({a.size.x, a.size.y, a.size.z, b.size.x, b.size.y, b.size.z});
    return euclidean_distance(a.centroid, b.centroid) < beta * max_extent;
}

double horizontal_angle(const Vec3& r, const CameraPose& cam) {
    const Vec3 up = normalized(cam.up);
    const Vec3 fwd_h = cam.forward - up * dot(cam.forward, up);
    const Vec3 fwd = normalized(fwd_h);
    const Vec3 right = normalized(cross(fwd, up));

    const Vec3 r_h = r - up * dot(r, up);
    if (norm(r_h) <= kDegenerateNorm) {
        throw DegenerateDirection("direction has no horizontal component");
    }
    // atan2 in the (forward, right) frame gives the clockwise-from-forward
    // angle when viewed from +up looking down.
    double theta = std::atan2(dot(r_h, right), dot(r_h, fwd)) * kDegPerRad;
    if (theta < 0.0) {
        theta += 360.0;
    }
    if (theta >= 360.0) {
        theta -= 360.0;
    }
    return theta;
}

int sector_label(double theta_deg, int n_sectors) {
    const double width = 360.0 / n_sectors;
    double snapped = std::round(theta_deg / width) * width;
    if (snapped >= 360.0) {
        snapped -= 360.0;
    }
    int hour = static_cast<int>(std::lround(snapped / 30.0)) % 12;
    return hour == 0 ? 12 : hour;
}

RelationTriplet relate_pair(const SceneObject& a, const SceneObject& b, const CameraPose& cam,
                            const PriorTable& priors, const ReasonerConfig& cfg) {
    if (a.id == b.id) {
        throw ValidationError("relate_pair requires distinct objects");
    }
    RelationTriplet triplet;
    triplet.subject_id = a.id;
    triplet.object_id = b.id;
    triplet.distance_m = euclidean_distance(a.centroid, b.centroid);

    // Semantic priors short-circuit all geometric reasoning.
    if (auto relation = priors.match(a.label, b.label)) {
        triplet.tags = {RelationTag::prior(*relation)};
        return triplet;
    }

    const bool nearby = is_nearby(a, b, cfg.beta);
    if (nearby) {
        triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::Nearby));
        if (cfg.nearby_exclusive) {
            return triplet;
        }
    }

    const Vec3 r = a.centroid - b.centroid;
    const Vec3 up_axis =
        cfg.vertical_axis == VerticalAxis::CameraUp ? cam.up : Vec3{0.0, 0.0, 1.0};
    const double vertical = dot(r, up_axis);
    if (vertical > 0.0) {
        triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::Above));
    } else if (vertical < 0.0) {
        triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::Below));
    }
    // A vertical component of exactly zero emits no vertical tag.

    try {
        const double theta = horizontal_angle(r, cam);
        triplet.theta_deg = theta;
        const double tol = cfg.theta_tol_deg;
        if (std::min(theta, 360.0 - theta) < tol) {
            triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::InFrontOf));
        } else if (std::abs(theta - 180.0) < tol) {
            triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::Behind));
        } else if (theta > tol && theta < 180.0 - tol) {
            triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::RightOf));
        } else if (theta > 180.0 + tol && theta < 360.0 - tol) {
            triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::LeftOf));
        }
        triplet.tags.push_back(RelationTag::oclock(sector_label(theta, cfg.n_sectors)));
    } catch (const DegenerateDirection&) {
        // Subject directly above/below object: only the vertical tag applies.
        triplet.theta_deg.reset();
    }

    if (triplet.tags.empty()) {
        // Unreachable for physical scenes (a zero-ish offset is always within
        // the nearby threshold), kept so the non-empty invariant holds.
        triplet.tags.push_back(RelationTag::simple(RelationTag::Kind::Nearby));
    }
    std::sort(triplet.tags.begin(), triplet.tags.end());
    triplet.tags.erase(std::unique(triplet.tags.begin(), triplet.tags.end()),
                       triplet.tags.end());
    return triplet;
}

std::vector<RelationTriplet> build_scene_graph(const Scene& scene, const PriorTable& priors,
                                               const ReasonerConfig& cfg) {
    cfg.validate();
    const auto& objects = scene.objects;
    const int n = static_cast<int>(objects.size());

    // Saliency pruning: keep each object's m nearest neighbors, symmetrized.
    std::set<std::pair<int, int>> kept;  // indices, ordered pairs
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> dists;
        dists.reserve(n - 1);
        for (int j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            dists.emplace_back(euclidean_distance(objects[i].centroid, objects[j].centroid), j);
        }
        std::sort(dists.begin(), dists.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) {
                return a.first < b.first;
            }
            return objects[a.second].id < objects[b.second].id;
        });
        const int keep = std::min<int>(cfg.saliency_m, static_cast<int>(dists.size()));
        for (int k = 0; k < keep; ++k) {
            const int j = dists[k].second;
            kept.insert({i, j});
            kept.insert({j, i});
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j && priors.match(objects[i].label, objects[j].label)) {
                kept.insert({i, j});
            }
        }
    }

    std::vector<RelationTriplet> graph;
    graph.reserve(kept.size());
    for (const auto& [i, j] : kept) {
        graph.push_back(relate_pair(objects[i], objects[j], scene.camera, priors, cfg));
    }
    std::sort(graph.begin(), graph.end(), [](const RelationTriplet& a, const RelationTriplet& b) {
        return std::tie(a.subject_id, a.object_id) < std::tie(b.subject_id, b.object_id);
    });
    return graph;
}

void save_graph(const std::string& path, const std::vector<RelationTriplet>& graph) {
    json doc = json::array();
    for (const RelationTriplet& t : graph) {
        json entry;
        entry["subject"] = t.subject_id;
        entry["object"] = t.object_id;
        json tags = json::array();
        for (const RelationTag& tag : t.tags) {
            tags.push_back(tag.to_string());
        }
        entry["tags"] = std::move(tags);
        entry["distance_m"] = t.distance_m;
        if (t.theta_deg) {
            entry["theta_deg"] = *t.theta_deg;
        }
        doc.push_back(std::move(entry));
    }
    write_json_file(path, doc);
}

std::vector<RelationTriplet> load_graph(const std::string& path) {
    const json doc = read_json_file(path);
    if (!doc.is_array()) {
        throw SchemaError("relation graph must be a JSON array: " + path);
    }
    std::vector<RelationTriplet> graph;
    for (const json& entry : doc) {
        RelationTriplet t;
        t.subject_id = entry.at("subject").get<int>();
        t.object_id = entry.at("object").get<int>();
        if (t.subject_id == t.object_id) {
            throw ValidationError("relation triplet with subject == object");
        }
        for (const json& tag : entry.at("tags")) {
            t.tags.push_back(RelationTag::from_string(tag.get<std::string>()));
        }
        if (t.tags.empty()) {
            throw ValidationError("relation triplet with empty tag set");
        }
        t.distance_m = entry.at("distance_m").get<double>();
        if (entry.contains("theta_deg")) {
            t.theta_deg = entry["theta_deg"].get<double>();
        }
        graph.push_back(std::move(t));
    }
    return graph;
}

} // namespace scenelang
