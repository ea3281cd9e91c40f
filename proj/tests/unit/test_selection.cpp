#include <doctest.h>

#include <algorithm>
#include <set>

#include "scenelang/errors.hpp"
#include "scenelang/rng.hpp"
#include "scenelang/selection.hpp"
#include "test_util.hpp"

using namespace scenelang;

namespace {

EmbeddingMatrix matrix(EmbeddingMatrix::Owner owner, std::vector<std::vector<double>> rows,
                       int object_id = -1) {
    return make_embedding_matrix(owner, object_id, std::move(rows));
}

// Independent scoring oracle: same documented rule, separate code path that
// walks raw arrays and normalizes explicitly.
std::vector<double> oracle_weights(const std::vector<std::vector<double>>& question,
                                   const std::vector<std::vector<std::vector<double>>>& captions) {
    auto unit = [](std::vector<double> v) {
        double n = 0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
        for (double& x : v) x /= n;
        return v;
    };
    std::vector<double> raw;
    for (const auto& caption : captions) {
        double total = 0.0;
        for (const auto& crow_raw : caption) {
            const auto crow = unit(crow_raw);
            double best = -1e18;
            for (const auto& qrow_raw : question) {
                const auto qrow = unit(qrow_raw);
                double dot = 0.0;
                for (std::size_t i = 0; i < crow.size(); ++i) {
                    dot += crow[i] * qrow[i];
                }
                best = std::max(best, dot);
            }
            total += best;
        }
        raw.push_back(total / static_cast<double>(caption.size()));
    }
    double denom = 0.0;
    std::vector<double> weights;
    for (double r : raw) {
        denom += std::exp(r);
    }
    for (double r : raw) {
        weights.push_back(std::exp(r) / denom);
    }
    return weights;
}

std::vector<std::vector<double>> random_rows(Rng& rng, int tokens, int dim) {
    std::vector<std::vector<double>> rows;
    for (int t = 0; t < tokens; ++t) {
        std::vector<double> row;
        for (int d = 0; d < dim; ++d) {
            row.push_back(rng.uniform(-1.0, 1.0));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

SceneInformation info_with_captions(int n) {
    SceneInformation info;
    info.system_message = default_system_message();
    for (int i = 0; i < n; ++i) {
        CaptionEntry entry;
        entry.object_id = i;
        entry.label = "object" + std::to_string(i);
        entry.text = "caption " + std::to_string(i);
        info.captions.push_back(std::move(entry));
    }
    for (int i = 0; i + 1 < n; ++i) {
        RelationSentence line;
        line.subject_id = i;
        line.object_id = i + 1;
        line.text = "relation " + std::to_string(i) + " " + std::to_string(i + 1);
        info.relations.push_back(std::move(line));
    }
    return info;
}

EmbeddingFile random_embeddings(Rng& rng, const SceneInformation& info, int dim) {
    EmbeddingFile embeds;
    embeds.dimension = dim;
    embeds.question = matrix(EmbeddingMatrix::Owner::Question, random_rows(rng, 4, dim));
    embeds.image = matrix(EmbeddingMatrix::Owner::Image, random_rows(rng, 4, dim));
    for (const CaptionEntry& entry : info.captions) {
        embeds.captions.emplace(
            entry.object_id,
            matrix(EmbeddingMatrix::Owner::Caption,
                   random_rows(rng, 2 + static_cast<int>(entry.object_id % 5), dim),
                   entry.object_id));
    }
    embeds.question_text = "where is it?";
    return embeds;
}

std::set<int> kept_ids(const SelectionResult& result) {
    std::set<int> ids;
    for (const auto& [id, weight] : result.kept) {
        ids.insert(id);
    }
    return ids;
}

} // namespace

TEST_CASE("relevance_scores softmax behavior") {
    SUBCASE("a single caption gets weight 1") {
        const auto q = matrix(EmbeddingMatrix::Owner::Question, {{1.0, 0.0}});
        const auto weights = relevance_scores(q, {matrix(EmbeddingMatrix::Owner::Caption,
                                                         {{1.0, 0.0}}, 0)});
        REQUIRE(weights.size() == 1);
        CHECK(weights[0] == doctest::Approx(1.0));
    }

    SUBCASE("similarities 1 and 0 softmax to e/(e+1) and 1/(e+1)") {
        const auto q = matrix(EmbeddingMatrix::Owner::Question, {{1.0, 0.0}});
        const auto weights =
            relevance_scores(q, {matrix(EmbeddingMatrix::Owner::Caption, {{1.0, 0.0}}, 0),
                                 matrix(EmbeddingMatrix::Owner::Caption, {{0.0, 1.0}}, 1)});
        CHECK(weights[0] == doctest::Approx(0.7311).epsilon(1e-4));
        CHECK(weights[1] == doctest::Approx(0.2689).epsilon(1e-4));
    }

    SUBCASE("30 random captions match the brute-force oracle") {
        Rng rng(91);
        const int dim = 8;
        const auto qrows = random_rows(rng, 5, dim);
        std::vector<std::vector<std::vector<double>>> craws;
        std::vector<EmbeddingMatrix> captions;
        for (int c = 0; c < 30; ++c) {
            craws.push_back(random_rows(rng, 3 + c % 4, dim));
            captions.push_back(matrix(EmbeddingMatrix::Owner::Caption, craws.back(), c));
        }
        const auto q = matrix(EmbeddingMatrix::Owner::Question, qrows);
        const auto weights = relevance_scores(q, captions);
        const auto expected = oracle_weights(qrows, craws);
        REQUIRE(weights.size() == expected.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            CHECK(weights[i] == doctest::Approx(expected[i]).epsilon(1e-9));
            sum += weights[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        const auto argmax_got =
            std::max_element(weights.begin(), weights.end()) - weights.begin();
        const auto argmax_exp =
            std::max_element(expected.begin(), expected.end()) - expected.begin();
        CHECK(argmax_got == argmax_exp);
    }

    SUBCASE("errors") {
        const auto q = matrix(EmbeddingMatrix::Owner::Question, {{1.0, 0.0}});
        CHECK_THROWS_AS(relevance_scores(q, {}), EmptyCaption);
        CHECK_THROWS_AS(
            relevance_scores(q, {matrix(EmbeddingMatrix::Owner::Caption, {{1, 0, 0}}, 0)}),
            DimensionMismatch);
        CHECK_THROWS_AS(make_embedding_matrix(EmbeddingMatrix::Owner::Caption, 0, {{0.0, 0.0}}),
                        ValidationError);
    }
}

TEST_CASE("select_top_k keeps ids, weights, and induced relations") {
    Rng rng(17);
    const auto info = info_with_captions(12);
    const auto embeds = random_embeddings(rng, info, 8);

    SUBCASE("k >= count keeps everything") {
        const auto result = select_top_k(info, embeds, 50);
        CHECK(result.kept.size() == 12);
        for (const CaptionEntry& entry : info.captions) {
            CHECK(result.prompt_prefix.find(entry.text) != std::string::npos);
        }
        for (const RelationSentence& line : info.relations) {
            CHECK(result.prompt_prefix.find(line.text) != std::string::npos);
        }
        CHECK(result.prompt_prefix.find("where is it?") != std::string::npos);
    }

    SUBCASE("k = 1 keeps one caption and no relations") {
        const auto result = select_top_k(info, embeds, 1);
        CHECK(result.kept.size() == 1);
        for (const RelationSentence& line : info.relations) {
            CHECK(result.prompt_prefix.find(line.text) == std::string::npos);
        }
    }

    SUBCASE("kept list is sorted by weight descending") {
        const auto result = select_top_k(info, embeds, 6);
        for (std::size_t i = 1; i < result.kept.size(); ++i) {
            CHECK(result.kept[i - 1].second >= result.kept[i].second);
        }
    }

    SUBCASE("monotone k: kept(k) is a subset of kept(k+1)") {
        for (int k = 1; k < 12; ++k) {
            const auto small = kept_ids(select_top_k(info, embeds, k));
            const auto large = kept_ids(select_top_k(info, embeds, k + 1));
            for (int id : small) {
                CHECK(large.count(id) == 1);
            }
        }
    }

    SUBCASE("permutation invariance of the kept set") {
        auto shuffled = info;
        std::reverse(shuffled.captions.begin(), shuffled.captions.end());
        const auto a = select_top_k(info, embeds, 5);
        const auto b = select_top_k(shuffled, embeds, 5);
        CHECK(kept_ids(a) == kept_ids(b));
        REQUIRE(a.kept.size() == b.kept.size());
        for (std::size_t i = 0; i < a.kept.size(); ++i) {
            CHECK(a.kept[i].first == b.kept[i].first);
            CHECK(a.kept[i].second == doctest::Approx(b.kept[i].second).epsilon(1e-12));
        }
    }

    SUBCASE("missing caption embedding raises") {
        auto gap = embeds;
        gap.captions.erase(3);
        CHECK_THROWS_AS(select_top_k(info, gap, 5), SchemaError);
    }
}

TEST_CASE("select_two_round narrows the round-1 survivors") {
    Rng rng(18);
    const auto info = info_with_captions(10);
    auto embeds = random_embeddings(rng, info, 8);

    SUBCASE("identical image and question embeddings reproduce round 1") {
        embeds.image = embeds.question;
        embeds.image->owner = EmbeddingMatrix::Owner::Image;
        const auto one = select_top_k(info, embeds, 6);
        const auto two = select_two_round(info, embeds, 6, 6);
        REQUIRE(one.kept.size() == two.kept.size());
        for (std::size_t i = 0; i < one.kept.size(); ++i) {
            CHECK(one.kept[i].first == two.kept[i].first);
        }
    }

    SUBCASE("k1 = k2 = count keeps everything in both rounds") {
        const auto result = select_two_round(info, embeds, 10, 10);
        CHECK(result.kept.size() == 10);
    }

    SUBCASE("round-2 kept set is a subset of round-1")  {
        const auto one = kept_ids(select_top_k(info, embeds, 7));
        const auto two = kept_ids(select_two_round(info, embeds, 7, 3));
        for (int id : two) {
            CHECK(one.count(id) == 1);
        }
    }

    SUBCASE("k2 > k1 raises InvalidK") {
        CHECK_THROWS_AS(select_two_round(info, embeds, 3, 7), InvalidK);
    }

    SUBCASE("fewer captions than k2 keeps them all") {
        const auto result = select_two_round(info, embeds, 40, 25);
        CHECK(result.kept.size() == 10);
        CHECK(result.rounds == 2);
    }
}

TEST_CASE("select_unfiltered keeps the full pool") {
    Rng rng(19);
    const auto info = info_with_captions(8);
    const auto embeds = random_embeddings(rng, info, 8);
    const auto result = select_unfiltered(info, embeds);
    CHECK(result.rounds == 0);
    CHECK(result.kept.size() == 8);
    for (const RelationSentence& line : info.relations) {
        CHECK(result.prompt_prefix.find(line.text) != std::string::npos);
    }
}

TEST_CASE("service embeddings build one sentence-level row per caption") {
    struct StubEmbedder : EmbedProvider {
        std::vector<double> embed(const std::string& input) override {
            // Deterministic and input-dependent: length plus a constant axis.
            return {static_cast<double>(input.size()), 1.0};
        }
    };
    const auto info = info_with_captions(4);
    StubEmbedder provider;
    const auto embeds = service_embeddings_for(info, "which one?", provider, 2);
    CHECK(embeds.dimension == 2);
    CHECK(embeds.question.rows.size() == 1);
    CHECK(embeds.captions.size() == 4);
    CHECK_FALSE(embeds.image.has_value());
    const auto result = select_top_k(info, embeds, 2);
    CHECK(result.kept.size() == 2);
}

TEST_CASE("embedding files and hash embeddings round-trip deterministically") {
    test_util::TempDir dir;
    Rng rng(20);
    const auto info = info_with_captions(5);
    const auto embeds = random_embeddings(rng, info, 6);
    save_embeddings(dir.file("embeds.json"), embeds);
    const auto loaded = load_embeddings(dir.file("embeds.json"));
    CHECK(loaded.dimension == 6);
    CHECK(loaded.question_text == embeds.question_text);
    CHECK(loaded.captions.size() == embeds.captions.size());
    const auto w1 = relevance_scores(embeds.question, {embeds.captions.at(0)});
    const auto w2 = relevance_scores(loaded.question, {loaded.captions.at(0)});
    CHECK(w1[0] == doctest::Approx(w2[0]).epsilon(1e-9));

    const auto h1 = hash_embeddings_for(info, "where is the chair?", 32);
    const auto h2 = hash_embeddings_for(info, "where is the chair?", 32);
    CHECK(h1.question.rows == h2.question.rows);
    CHECK(h1.captions.at(2).rows == h2.captions.at(2).rows);
}
