#include "scenelang/selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"
#include "scenelang/providers.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

constexpr double kRowNormTol = 1e-5;

// (object_id, weight) ranking shared by both rounds.
struct Ranked {
    int object_id;
    double weight;
};

std::vector<Ranked> rank_by_weight(const std::vector<int>& ids,
                                   const std::vector<double>& weights) {
    std::vector<Ranked> ranked(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ranked[i] = {ids[i], weights[i]};
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.weight != b.weight) {
            return a.weight > b.weight;
        }
        return a.object_id < b.object_id;
    });
    return ranked;
}

std::string assemble_prompt(const SceneInformation& info, const std::set<int>& kept_ids,
                            const std::string& question_text) {
    std::ostringstream out;
    out << info.system_message << "\n";
    out << "\n";
    for (const CaptionEntry& entry : info.captions) {
        if (kept_ids.count(entry.object_id)) {
            out << "[" << entry.label << "-" << entry.object_id << "] " << entry.text << "\n";
        }
    }
    out << "\n";
    for (const RelationSentence& line : info.relations) {
        if (kept_ids.count(line.subject_id) && kept_ids.count(line.object_id)) {
            out << line.text << "\n";
        }
    }
    if (!question_text.empty()) {
        out << "\n" << question_text << "\n";
    }
    return out.str();
}

std::vector<EmbeddingMatrix> caption_matrices(const SceneInformation& info,
                                              const EmbeddingFile& embeds,
                                              std::vector<int>* ids_out) {
    std::vector<EmbeddingMatrix> matrices;
    for (const CaptionEntry& entry : info.captions) {
        auto it = embeds.captions.find(entry.object_id);
        if (it == embeds.captions.end()) {
            throw SchemaError("embedding file has no caption embedding for object " +
                              std::to_string(entry.object_id));
        }
        matrices.push_back(it->second);
        ids_out->push_back(entry.object_id);
    }
    return matrices;
}

SelectionResult finish(const SceneInformation& info, const std::vector<Ranked>& ranked,
                       int keep, int rounds, int k, const std::string& question_text) {
    SelectionResult result;
    result.rounds = rounds;
    result.k = k;
    std::set<int> kept_ids;
    for (int i = 0; i < keep && i < static_cast<int>(ranked.size()); ++i) {
        result.kept.emplace_back(ranked[i].object_id, ranked[i].weight);
        kept_ids.insert(ranked[i].object_id);
    }
    result.prompt_prefix = assemble_prompt(info, kept_ids, question_text);
    return result;
}

} // namespace

EmbeddingMatrix make_embedding_matrix(EmbeddingMatrix::Owner owner, int object_id,
                                      std::vector<std::vector<double>> rows) {
    EmbeddingMatrix matrix;
    matrix.owner = owner;
    matrix.object_id = object_id;
    std::size_t dim = 0;
    for (std::vector<double>& row : rows) {
        if (dim == 0) {
            dim = row.size();
        }
        if (row.empty() || row.size() != dim) {
            throw DimensionMismatch("embedding rows have mixed dimensions");
        }
        double sq = 0.0;
        for (double x : row) {
            sq += x * x;
        }
        const double n = std::sqrt(sq);
        if (n < kRowNormTol) {
            throw ValidationError("zero-norm embedding row");
        }
        for (double& x : row) {
            x /= n;
        }
    }
    matrix.rows = std::move(rows);
    return matrix;
}

std::vector<double> relevance_scores(const EmbeddingMatrix& question,
                                     const std::vector<EmbeddingMatrix>& captions) {
    if (captions.empty()) {
        throw EmptyCaption("relevance_scores requires at least one caption");
    }
    if (question.rows.empty()) {
        throw EmptyCaption("question embedding has no tokens");
    }
    const int dim = question.dimension();
    std::vector<double> raw(captions.size());
    for (std::size_t c = 0; c < captions.size(); ++c) {
        const EmbeddingMatrix& caption = captions[c];
        if (caption.rows.empty()) {
            throw EmptyCaption("caption embedding has no tokens (index " + std::to_string(c) +
                               ")");
        }
        if (caption.dimension() != dim) {
            throw DimensionMismatch("caption dimension " + std::to_string(caption.dimension()) +
                                    " != question dimension " + std::to_string(dim));
        }
        double sum_max = 0.0;
        for (const std::vector<double>& crow : caption.rows) {
            double best = -2.0;
            for (const std::vector<double>& qrow : question.rows) {
                double dot = 0.0;
                for (int i = 0; i < dim; ++i) {
                    dot += crow[static_cast<std::size_t>(i)] * qrow[static_cast<std::size_t>(i)];
                }
                best = std::max(best, dot);
            }
            sum_max += best;
        }
        raw[c] = sum_max / static_cast<double>(caption.rows.size());
    }

    const double max_raw = *std::max_element(raw.begin(), raw.end());
    double denom = 0.0;
    std::vector<double> weights(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        weights[i] = std::exp(raw[i] - max_raw);
        denom += weights[i];
    }
    for (double& w : weights) {
        w /= denom;
    }
    return weights;
}

EmbeddingFile load_embeddings(const std::string& path) {
    const json doc = read_json_file(path);
    EmbeddingFile out;
    out.dimension = doc.at("dimension").get<int>();
    if (out.dimension < 1) {
        throw ValidationError("embedding dimension must be >= 1");
    }
    auto read_matrix = [&](const json& value, EmbeddingMatrix::Owner owner, int object_id) {
        auto rows = value.get<std::vector<std::vector<double>>>();
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != out.dimension) {
                throw DimensionMismatch("embedding row length " + std::to_string(row.size()) +
                                        " != dimension " + std::to_string(out.dimension));
            }
        }
        return make_embedding_matrix(owner, object_id, std::move(rows));
    };
    out.question = read_matrix(doc.at("question"), EmbeddingMatrix::Owner::Question, -1);
    for (const auto& [key, value] : doc.at("captions").items()) {
        int object_id = 0;
        try {
            object_id = std::stoi(key);
        } catch (const std::exception&) {
            throw SchemaError("caption embedding key is not an object id: " + key);
        }
        out.captions.emplace(object_id,
                             read_matrix(value, EmbeddingMatrix::Owner::Caption, object_id));
    }
    if (doc.contains("image")) {
        out.image = read_matrix(doc["image"], EmbeddingMatrix::Owner::Image, -1);
    }
    if (doc.contains("question_text")) {
        out.question_text = doc["question_text"].get<std::string>();
    }
    return out;
}

void save_embeddings(const std::string& path, const EmbeddingFile& embeds) {
    json doc;
    doc["dimension"] = embeds.dimension;
    doc["question"] = embeds.question.rows;
    json captions = json::object();
    for (const auto& [id, matrix] : embeds.captions) {
        captions[std::to_string(id)] = matrix.rows;
    }
    doc["captions"] = std::move(captions);
    if (embeds.image) {
        doc["image"] = embeds.image->rows;
    }
    if (!embeds.question_text.empty()) {
        doc["question_text"] = embeds.question_text;
    }
    write_json_file(path, doc);
}

EmbeddingFile hash_embeddings_for(const SceneInformation& info, const std::string& question_text,
                                  int dim) {
    if (dim < 1) {
        throw ValidationError("embedding dimension must be >= 1");
    }
    EmbeddingFile out;
    out.dimension = dim;
    out.question_text = question_text;
    out.question = make_embedding_matrix(EmbeddingMatrix::Owner::Question, -1,
                                         hash_text_embedding(question_text, dim));
    if (out.question.rows.empty()) {
        throw EmptyCaption("question text has no tokens");
    }
    for (const CaptionEntry& entry : info.captions) {
        // The label joins the caption tokens so selection can match
        // label-bearing questions even when the caption text omits it.
        auto rows = hash_text_embedding(entry.label + " " + entry.text, dim);
        out.captions.emplace(entry.object_id,
                             make_embedding_matrix(EmbeddingMatrix::Owner::Caption,
                                                   entry.object_id, std::move(rows)));
    }
    out.image = out.question;
    out.image->owner = EmbeddingMatrix::Owner::Image;
    return out;
}

EmbeddingFile service_embeddings_for(const SceneInformation& info,
                                     const std::string& question_text, EmbedProvider& provider,
                                     int max_in_flight) {
    EmbeddingFile out;
    out.question_text = question_text;
    std::vector<std::vector<double>> rows(info.captions.size() + 1);
    run_parallel(static_cast<int>(rows.size()), max_in_flight, [&](int i) {
        if (i == 0) {
            rows[0] = provider.embed(question_text);
        } else {
            rows[static_cast<std::size_t>(i)] =
                provider.embed(info.captions[static_cast<std::size_t>(i - 1)].text);
        }
    });
    out.dimension = static_cast<int>(rows[0].size());
    out.question =
        make_embedding_matrix(EmbeddingMatrix::Owner::Question, -1, {std::move(rows[0])});
    for (std::size_t i = 0; i < info.captions.size(); ++i) {
        const int id = info.captions[i].object_id;
        if (static_cast<int>(rows[i + 1].size()) != out.dimension) {
            throw DimensionMismatch("embedding service returned mixed dimensions");
        }
        out.captions.emplace(id, make_embedding_matrix(EmbeddingMatrix::Owner::Caption, id,
                                                       {std::move(rows[i + 1])}));
    }
    return out;
}

SelectionResult select_top_k(const SceneInformation& info, const EmbeddingFile& embeds, int k) {
    if (k < 1) {
        throw ValidationError("k must be >= 1");
    }
    std::vector<int> ids;
    const std::vector<EmbeddingMatrix> matrices = caption_matrices(info, embeds, &ids);
    const std::vector<double> weights = relevance_scores(embeds.question, matrices);
    const std::vector<Ranked> ranked = rank_by_weight(ids, weights);
    return finish(info, ranked, k, 1, k, embeds.question_text);
}

SelectionResult select_two_round(const SceneInformation& info, const EmbeddingFile& embeds,
                                 int k1, int k2) {
    if (k2 > k1) {
        throw InvalidK("k2 must be <= k1");
    }
    if (!embeds.image) {
        throw SchemaError("two-round selection requires image embeddings");
    }
    SelectionResult round1 = select_top_k(info, embeds, k1);

    std::vector<int> survivor_ids;
    std::vector<EmbeddingMatrix> survivor_matrices;
    for (const auto& [id, weight] : round1.kept) {
        survivor_ids.push_back(id);
        survivor_matrices.push_back(embeds.captions.at(id));
    }
    const std::vector<double> weights = relevance_scores(*embeds.image, survivor_matrices);
    const std::vector<Ranked> ranked = rank_by_weight(survivor_ids, weights);
    SelectionResult result = finish(info, ranked, k2, 2, k2, embeds.question_text);
    return result;
}

SelectionResult select_unfiltered(const SceneInformation& info, const EmbeddingFile& embeds) {
    const int total = static_cast<int>(info.captions.size());
    if (total == 0) {
        throw EmptyCaption("scene information has no captions");
    }
    SelectionResult result = select_top_k(info, embeds, total);
    result.rounds = 0;
    result.k = total;
    return result;
}

void save_selection(const std::string& path, const SelectionResult& result) {
    json doc;
    doc["rounds"] = result.rounds;
    doc["k"] = result.k;
    json kept = json::array();
    for (const auto& [id, weight] : result.kept) {
        kept.push_back({{"object_id", id}, {"weight", weight}});
    }
    doc["kept"] = std::move(kept);
    doc["prompt_prefix"] = result.prompt_prefix;
    write_json_file(path, doc);
}

} // namespace scenelang
