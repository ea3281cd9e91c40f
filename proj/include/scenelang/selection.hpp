#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenelang/scene_info.hpp"

namespace scenelang {

// Token embeddings, one unit row per token.
struct EmbeddingMatrix {
    enum class Owner { Question, Caption, Image };

    Owner owner = Owner::Caption;
    int object_id = -1;  // Caption rows only
    std::vector<std::vector<double>> rows;

    int dimension() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
};

// Normalizes rows in place; throws on zero rows or mixed dimensions.
EmbeddingMatrix make_embedding_matrix(EmbeddingMatrix::Owner owner, int object_id,
                                      std::vector<std::vector<double>> rows);

// Late-interaction relevance: for each caption the raw score is the mean over
// caption tokens of the max cosine against any question token; the returned
// weights are the softmax of the raw scores over all captions.
std::vector<double> relevance_scores(const EmbeddingMatrix& question,
                                     const std::vector<EmbeddingMatrix>& captions);

struct EmbeddingFile {
    int dimension = 0;
    EmbeddingMatrix question;
    std::map<int, EmbeddingMatrix> captions;
    std::optional<EmbeddingMatrix> image;
    std::string question_text;  // optional, appended to the prompt prefix
};

EmbeddingFile load_embeddings(const std::string& path);
void save_embeddings(const std::string& path, const EmbeddingFile& embeds);

// Deterministic hashed token embeddings covering every caption in the scene
// information, for hermetic runs without an embedding service.
EmbeddingFile hash_embeddings_for(const SceneInformation& info, const std::string& question_text,
                                  int dim = 64);

// Embeddings from a remote service, one sentence-level row per caption and
// for the question. Requests run concurrently up to max_in_flight.
EmbeddingFile service_embeddings_for(const SceneInformation& info,
                                     const std::string& question_text, EmbedProvider& provider,
                                     int max_in_flight = 4);

struct SelectionResult {
    std::vector<std::pair<int, double>> kept;  // (object_id, weight), weight desc
    int rounds = 1;                            // 0 = no filtering
    int k = 0;
    std::string prompt_prefix;
};

// Keeps the k highest-weighted captions (ties by ascending object id) and the
// relation sentences whose endpoints both survive; assembles the prompt
// prefix system message + captions + relations + question.
SelectionResult select_top_k(const SceneInformation& info, const EmbeddingFile& embeds, int k);

// Round 1 uses the question embeddings with k1; round 2 re-scores the
// survivors against the image embeddings (softmax over survivors only) and
// keeps k2. Throws InvalidK when k2 > k1.
SelectionResult select_two_round(const SceneInformation& info, const EmbeddingFile& embeds,
                                 int k1, int k2);

// The "no filtering" baseline: everything kept, weights still reported.
SelectionResult select_unfiltered(const SceneInformation& info, const EmbeddingFile& embeds);

void save_selection(const std::string& path, const SelectionResult& result);

} // namespace scenelang
