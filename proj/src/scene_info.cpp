#include "scenelang/scene_info.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

std::string format_meters(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

std::string mention(const std::string& label, int id) {
    return "[" + label + "-" + std::to_string(id) + "]";
}

const ObjectRef& lookup(const ObjectIndex& objects, int id) {
    auto it = objects.find(id);
    if (it == objects.end()) {
        throw UnknownId("no object with id " + std::to_string(id));
    }
    return it->second;
}

// Coarse phrase priority: prior > nearby > horizontal > vertical. Left/right
// read "to the left/right of" exactly as in complex mode, which keeps the
// complex rendering under twice the simple one on every scene.
std::string simple_phrase(const RelationTriplet& t) {
    if (auto prior = t.prior_text()) {
        return *prior;
    }
    if (t.has_tag(RelationTag::Kind::Nearby)) {
        return "nearby";
    }
    if (t.has_tag(RelationTag::Kind::InFrontOf)) return "in front of";
    if (t.has_tag(RelationTag::Kind::Behind)) return "behind";
    if (t.has_tag(RelationTag::Kind::LeftOf)) return "to the left of";
    if (t.has_tag(RelationTag::Kind::RightOf)) return "to the right of";
    if (t.has_tag(RelationTag::Kind::Above)) return "above";
    if (t.has_tag(RelationTag::Kind::Below)) return "below";
    return "nearby";
}

std::string complex_phrase(const RelationTag& tag) {
    switch (tag.kind) {
        case RelationTag::Kind::Nearby: return "nearby";
        case RelationTag::Kind::Above: return "above";
        case RelationTag::Kind::Below: return "below";
        case RelationTag::Kind::InFrontOf: return "in front of";
        case RelationTag::Kind::Behind: return "behind";
        case RelationTag::Kind::LeftOf: return "to the left of";
        case RelationTag::Kind::RightOf: return "to the right of";
        default: return "";
    }
}

} // namespace

std::string to_string(ExpressionMode mode) {
    switch (mode) {
        case ExpressionMode::Coordinate: return "coordinate";
        case ExpressionMode::Simple: return "simple";
        case ExpressionMode::Complex: return "complex";
    }
    throw ValidationError("unknown expression mode");
}

ExpressionMode expression_mode_from_string(const std::string& text) {
    if (text == "coordinate") return ExpressionMode::Coordinate;
    if (text == "simple") return ExpressionMode::Simple;
    if (text == "complex") return ExpressionMode::Complex;
    throw SchemaError("unknown expression mode: " + text);
}

ObjectIndex make_object_index(const Scene& scene) {
    ObjectIndex index;
    for (const SceneObject& obj : scene.objects) {
        index[obj.id] = ObjectRef{obj.label, obj.centroid, obj.size};
    }
    return index;
}

std::string render_coordinate_line(int object_id, const ObjectIndex& objects) {
    const ObjectRef& obj = lookup(objects, object_id);
    std::ostringstream out;
    out << "The " << obj.label << " " << mention(obj.label, object_id) << " is at ("
        << format_meters(obj.centroid.x) << ", " << format_meters(obj.centroid.y) << ", "
        << format_meters(obj.centroid.z) << ") with size (" << format_meters(obj.size.x)
        << ", " << format_meters(obj.size.y) << ", " << format_meters(obj.size.z) << ").";
    return out.str();
}

std::string render_relation(const RelationTriplet& t, const ObjectIndex& objects,
                            ExpressionMode mode) {
    if (mode == ExpressionMode::Coordinate) {
        return render_coordinate_line(t.subject_id, objects);
    }
    const ObjectRef& subject = lookup(objects, t.subject_id);
    const ObjectRef& object = lookup(objects, t.object_id);
    const std::string subject_ref =
        "The " + subject.label + " " + mention(subject.label, t.subject_id);
    const std::string object_ref =
        "the " + object.label + " " + mention(object.label, t.object_id);

    if (auto prior = t.prior_text()) {
        // Prior relations read the same in both modes.
        return subject_ref + " is " + *prior + " " + object_ref + ".";
    }
    if (mode == ExpressionMode::Simple) {
        return subject_ref + " is " + simple_phrase(t) + " " + object_ref + ".";
    }

    std::string phrases;
    for (const RelationTag& tag : t.tags) {
        const std::string phrase = complex_phrase(tag);
        if (phrase.empty()) {
            continue;  // o'clock handled separately
        }
        if (!phrases.empty()) {
            phrases += " and ";
        }
        phrases += phrase;
    }
    if (phrases.empty()) {
        phrases = "nearby";
    }
    std::string sentence = subject_ref + " is " + phrases + " " + object_ref;
    if (auto hour = t.oclock_hour()) {
        sentence += ", at " + std::to_string(*hour) + " o'clock";
    }
    sentence += ", about " + format_meters(t.distance_m) + " m away.";
    return sentence;
}

SceneInformation build_scene_information(const Scene& scene,
                                         const std::vector<RelationTriplet>& graph,
                                         const std::vector<ObjectCaption>& captions,
                                         ExpressionMode mode) {
    const ObjectIndex index = make_object_index(scene);

    std::set<int> captioned;
    SceneInformation info;
    info.mode = mode;
    info.system_message = default_system_message();
    for (const ObjectCaption& caption : captions) {
        if (caption.text.empty()) {
            throw ValidationError("empty caption for object " +
                                  std::to_string(caption.object_id));
        }
        CaptionEntry entry;
        entry.object_id = caption.object_id;
        entry.label = lookup(index, caption.object_id).label;
        entry.text = caption.text;
        info.captions.push_back(std::move(entry));
        captioned.insert(caption.object_id);
    }
    std::sort(info.captions.begin(), info.captions.end(),
              [](const CaptionEntry& a, const CaptionEntry& b) {
                  return a.object_id < b.object_id;
              });

    for (const RelationTriplet& t : graph) {
        if (!captioned.count(t.subject_id) || !captioned.count(t.object_id)) {
            throw MissingCaption("relation references uncaptioned object " +
                                 std::to_string(captioned.count(t.subject_id)
                                                    ? t.object_id
                                                    : t.subject_id));
        }
    }

    if (mode == ExpressionMode::Coordinate) {
        for (const CaptionEntry& entry : info.captions) {
            RelationSentence line;
            line.subject_id = entry.object_id;
            line.object_id = entry.object_id;
            line.text = render_coordinate_line(entry.object_id, index);
            info.relations.push_back(std::move(line));
        }
    } else {
        for (const RelationTriplet& t : graph) {
            RelationSentence line;
            line.subject_id = t.subject_id;
            line.object_id = t.object_id;
            line.text = render_relation(t, index, mode);
            info.relations.push_back(std::move(line));
        }
        std::sort(info.relations.begin(), info.relations.end(),
                  [](const RelationSentence& a, const RelationSentence& b) {
                      if (a.subject_id != b.subject_id) {
                          return a.subject_id < b.subject_id;
                      }
                      return a.object_id < b.object_id;
                  });
    }

    info.token_estimate = count_tokens(to_text(info));
    return info;
}

std::string to_text(const SceneInformation& info) {
    std::ostringstream out;
    out << info.system_message << "\n";
    out << "\n";
    for (const CaptionEntry& entry : info.captions) {
        out << mention(entry.label, entry.object_id) << " " << entry.text << "\n";
    }
    out << "\n";
    for (const RelationSentence& line : info.relations) {
        out << line.text << "\n";
    }
    return out.str();
}

void save_scene_information(const std::string& path, const SceneInformation& info) {
    json doc;
    doc["system_message"] = info.system_message;
    json captions = json::array();
    for (const CaptionEntry& entry : info.captions) {
        captions.push_back({{"object_id", entry.object_id},
                            {"label", entry.label},
                            {"text", entry.text}});
    }
    doc["captions"] = std::move(captions);
    json relations = json::array();
    for (const RelationSentence& line : info.relations) {
        relations.push_back({{"subject", line.subject_id},
                             {"object", line.object_id},
                             {"text", line.text}});
    }
    doc["relations"] = std::move(relations);
    doc["mode"] = to_string(info.mode);
    doc["token_estimate"] = info.token_estimate;
    write_json_file(path, doc);
}

SceneInformation load_scene_information(const std::string& path) {
    const json doc = read_json_file(path);
    SceneInformation info;
    info.system_message = doc.at("system_message").get<std::string>();
    for (const json& entry : doc.at("captions")) {
        CaptionEntry c;
        c.object_id = entry.at("object_id").get<int>();
        c.label = entry.at("label").get<std::string>();
        c.text = entry.at("text").get<std::string>();
        info.captions.push_back(std::move(c));
    }
    for (const json& entry : doc.at("relations")) {
        RelationSentence line;
        line.subject_id = entry.at("subject").get<int>();
        line.object_id = entry.at("object").get<int>();
        line.text = entry.at("text").get<std::string>();
        info.relations.push_back(std::move(line));
    }
    info.mode = expression_mode_from_string(doc.at("mode").get<std::string>());
    info.token_estimate = doc.at("token_estimate").get<int>();
    return info;
}

const std::string& default_system_message() {
    static const std::string message =
        "Scene information v1. The text below describes an indoor 3D scene. "
        "The first section gives one caption per object; objects are referred "
        "to as [label-id]. The second section describes spatial relationships "
        "between objects as seen from the camera viewpoint; clock-face "
        "directions use 12 o'clock for straight ahead of the camera. Answer "
        "questions about the scene using only this information.";
    return message;
}

} // namespace scenelang
