#include "scenelang/captions.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("embedding dimensions differ: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw DimensionMismatch("zero-norm embedding");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> mean_embedding(const std::vector<CaptionCandidate>& candidates) {
    std::vector<double> mean;
    int used = 0;
    for (const CaptionCandidate& c : candidates) {
        if (!c.embedding) {
            continue;
        }
        if (mean.empty()) {
            mean.assign(c.embedding->size(), 0.0);
        }
        if (c.embedding->size() != mean.size()) {
            throw DimensionMismatch("candidate embeddings have mixed dimensions");
        }
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += (*c.embedding)[i];
        }
        ++used;
    }
    if (used > 0) {
        for (double& x : mean) {
            x /= used;
        }
    }
    double sq = 0.0;
    for (double x : mean) {
        sq += x * x;
    }
    if (sq < 1e-24) {
        mean.clear();  // degenerate query, caller keeps file order
    }
    return mean;
}

} // namespace

std::vector<CaptionCandidate> rank_candidates(const std::vector<double>& crop_embedding,
                                              std::vector<CaptionCandidate> candidates,
                                              int top_n) {
    if (top_n < 1) {
        throw ValidationError("top_n must be >= 1");
    }
    for (CaptionCandidate& c : candidates) {
        if (c.text.empty()) {
            throw ValidationError("candidate with empty text");
        }
        if (!c.embedding) {
            throw DimensionMismatch("candidate without embedding cannot be ranked: " + c.text);
        }
        c.similarity = cosine(crop_embedding, *c.embedding);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const CaptionCandidate& a, const CaptionCandidate& b) {
                         if (*a.similarity != *b.similarity) {
                             return *a.similarity > *b.similarity;
                         }
                         return a.text < b.text;
                     });
    if (static_cast<int>(candidates.size()) > top_n) {
        candidates.resize(top_n);
    }
    return candidates;
}

ObjectCaption fuse_captions(const std::vector<CaptionCandidate>& ranked,
                            RefineProvider* refiner) {
    if (ranked.empty()) {
        throw ValidationError("fuse_captions requires at least one candidate");
    }
    ObjectCaption caption;
    caption.object_id = ranked.front().object_id;
    caption.candidates_used = static_cast<int>(ranked.size());
    if (refiner == nullptr) {
        caption.text = ranked.front().text;
        return caption;
    }
    std::vector<std::string> texts;
    texts.reserve(ranked.size());
    for (const CaptionCandidate& c : ranked) {
        texts.push_back(c.text);
    }
    caption.text = refiner->refine(
        "Integrate these candidate captions into one accurate sentence.", texts);
    if (caption.text.empty()) {
        throw ProviderError("refiner returned an empty caption");
    }
    caption.refined = true;
    return caption;
}

std::map<int, CandidateSet> load_candidates(const std::string& path) {
    const json doc = read_json_file(path);
    if (!doc.is_object()) {
        throw SchemaError("candidate file must be a JSON object: " + path);
    }
    std::map<int, CandidateSet> out;
    for (const auto& [key, value] : doc.items()) {
        int object_id = 0;
        try {
            object_id = std::stoi(key);
        } catch (const std::exception&) {
            throw SchemaError("candidate file key is not an object id: " + key);
        }
        CandidateSet set;
        const json* list = nullptr;
        if (value.is_array()) {
            list = &value;
        } else if (value.is_object() && value.contains("candidates")) {
            if (value.contains("crop_embedding")) {
                set.crop_embedding = value["crop_embedding"].get<std::vector<double>>();
            }
            list = &value["candidates"];
        } else {
            throw SchemaError("candidate entry for object " + key +
                              " must be an array or {crop_embedding, candidates}");
        }
        for (const json& item : *list) {
            CaptionCandidate c;
            c.object_id = object_id;
            c.text = item.at("text").get<std::string>();
            if (c.text.empty()) {
                throw ValidationError("empty candidate text for object " + key);
            }
            c.source = CaptionCandidate::Source::OfflineFile;
            if (item.contains("embedding")) {
                c.embedding = item["embedding"].get<std::vector<double>>();
            }
            set.candidates.push_back(std::move(c));
        }
        out.emplace(object_id, std::move(set));
    }
    return out;
}

std::vector<ObjectCaption> caption_objects(const Scene& scene,
                                           const std::map<int, CandidateSet>& candidates,
                                           RefineProvider* refiner,
                                           const CaptionPipelineConfig& cfg) {
    std::vector<ObjectCaption> captions(scene.objects.size());
    run_parallel(static_cast<int>(scene.objects.size()),
                 refiner ? cfg.max_in_flight : 1, [&](int i) {
        const SceneObject& obj = scene.objects[static_cast<std::size_t>(i)];
        auto it = candidates.find(obj.id);
        if (it == candidates.end() || it->second.candidates.empty()) {
            ObjectCaption fallback;
            fallback.object_id = obj.id;
            fallback.text = cfg.fallback_prefix + obj.label;
            fallback.candidates_used = 0;
            captions[static_cast<std::size_t>(i)] = std::move(fallback);
            return;
        }
        const CandidateSet& set = it->second;
        std::vector<double> query =
            set.crop_embedding ? *set.crop_embedding : mean_embedding(set.candidates);
        std::vector<CaptionCandidate> ranked;
        if (query.empty()) {
            // No embeddings at all: keep file order, take the first.
            ranked = set.candidates;
            if (static_cast<int>(ranked.size()) > cfg.top_n) {
                ranked.resize(static_cast<std::size_t>(cfg.top_n));
            }
        } else {
            ranked = rank_candidates(query, set.candidates, cfg.top_n);
        }
        captions[static_cast<std::size_t>(i)] = fuse_captions(ranked, refiner);
    });
    std::sort(captions.begin(), captions.end(),
              [](const ObjectCaption& a, const ObjectCaption& b) {
                  return a.object_id < b.object_id;
              });
    return captions;
}

void save_captions(const std::string& path, const std::vector<ObjectCaption>& captions) {
    json doc = json::array();
    for (const ObjectCaption& caption : captions) {
        json entry;
        entry["object_id"] = caption.object_id;
        entry["text"] = caption.text;
        entry["candidates_used"] = caption.candidates_used;
        entry["refined"] = caption.refined;
        if (caption.score) {
            entry["score"] = *caption.score;
        }
        doc.push_back(std::move(entry));
    }
    write_json_file(path, doc);
}

std::vector<ObjectCaption> load_captions(const std::string& path) {
    const json doc = read_json_file(path);
    if (!doc.is_array()) {
        throw SchemaError("caption file must be a JSON array: " + path);
    }
    std::vector<ObjectCaption> captions;
    for (const json& entry : doc) {
        ObjectCaption caption;
        caption.object_id = entry.at("object_id").get<int>();
        caption.text = entry.at("text").get<std::string>();
        caption.candidates_used = entry.value("candidates_used", 0);
        caption.refined = entry.value("refined", false);
        if (entry.contains("score")) {
            caption.score = entry["score"].get<double>();
        }
        captions.push_back(std::move(caption));
    }
    return captions;
}

} // namespace scenelang
