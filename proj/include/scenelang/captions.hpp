#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenelang/providers.hpp"
#include "scenelang/scene.hpp"

namespace scenelang {

struct CaptionCandidate {
    enum class Source { Service, OfflineFile };

    int object_id = 0;
    std::string text;
    Source source = Source::OfflineFile;
    std::optional<std::vector<double>> embedding;  // provider-defined dimension
    std::optional<double> similarity;              // set by ranking, in [-1, 1]
};

struct ObjectCaption {
    int object_id = 0;
    std::string text;
    int candidates_used = 0;
    bool refined = false;
    std::optional<double> score;
};

// Cosine-ranks candidates against the crop embedding. Ties break by text so
// the order is deterministic. Returns the top min(top_n, size) candidates
// with their similarity filled in; input texts are never mutated.
std::vector<CaptionCandidate> rank_candidates(const std::vector<double>& crop_embedding,
                                              std::vector<CaptionCandidate> candidates,
                                              int top_n = 10);

// Service mode hands the ranked texts to the refiner; offline mode (null
// refiner) takes the best-ranked candidate verbatim.
ObjectCaption fuse_captions(const std::vector<CaptionCandidate>& ranked,
                            RefineProvider* refiner);

struct CandidateSet {
    std::optional<std::vector<double>> crop_embedding;
    std::vector<CaptionCandidate> candidates;
};

// Offline candidate file: object_id -> array of {text, embedding}, or the
// extended form {crop_embedding, candidates}. Without a crop embedding the
// normalized mean of the candidate embeddings serves as the ranking query.
std::map<int, CandidateSet> load_candidates(const std::string& path);

struct CaptionPipelineConfig {
    int top_n = 10;
    int max_in_flight = 4;
    std::string fallback_prefix = "a ";  // caption for objects with no candidates
};

// One fused caption per scene object, sorted by object id. Deterministic in
// offline mode. Provider failures propagate as ProviderError.
std::vector<ObjectCaption> caption_objects(const Scene& scene,
                                           const std::map<int, CandidateSet>& candidates,
                                           RefineProvider* refiner,
                                           const CaptionPipelineConfig& cfg = {});

void save_captions(const std::string& path, const std::vector<ObjectCaption>& captions);
std::vector<ObjectCaption> load_captions(const std::string& path);

} // namespace scenelang
