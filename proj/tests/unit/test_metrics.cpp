#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "scenelang/errors.hpp"
#include "scenelang/metrics.hpp"
#include "scenelang/providers.hpp"
#include "scenelang/rng.hpp"
#include "scenelang/stemmer.hpp"

using namespace scenelang;

namespace {

Box3 box(double cx, double cy, double cz, double sx = 1, double sy = 1, double sz = 1) {
    return Box3{{cx, cy, cz}, {sx, sy, sz}};
}

// --- independent CIDEr oracle -------------------------------------------
// Same documented formula, different machinery: n-grams held as
// vector<string> keys inside std::map, per-n vectors assembled sample by
// sample with explicit loops.

using OracleNgram = std::vector<std::string>;

std::map<OracleNgram, int> oracle_counts(const std::vector<std::string>& tokens, int n) {
    std::map<OracleNgram, int> counts;
    for (int i = 0; i + n <= static_cast<int>(tokens.size()); ++i) {
        OracleNgram gram(tokens.begin() + i, tokens.begin() + i + n);
        counts[gram] += 1;
    }
    return counts;
}

double oracle_cider(const std::vector<std::string>& candidates,
                    const std::vector<std::vector<std::string>>& references) {
    const int big_n = static_cast<int>(candidates.size());
    double corpus = 0.0;
    for (int n = 1; n <= 4; ++n) {
        // document frequency across reference sets
        std::map<OracleNgram, int> df;
        for (const auto& refs : references) {
            std::set<OracleNgram> seen;
            for (const auto& ref : refs) {
                for (const auto& [gram, c] : oracle_counts(tokenize_lower(ref), n)) {
                    seen.insert(gram);
                }
            }
            for (const auto& gram : seen) {
                df[gram] += 1;
            }
        }
        auto idf = [&](const OracleNgram& gram) {
            auto it = df.find(gram);
            const double d = it == df.end() ? 1.0 : it->second;
            return std::log(static_cast<double>(big_n)) - std::log(std::max(1.0, d));
        };
        for (int i = 0; i < big_n; ++i) {
            const auto cand = oracle_counts(tokenize_lower(candidates[static_cast<std::size_t>(i)]), n);
            double per_ref = 0.0;
            for (const auto& ref_text : references[static_cast<std::size_t>(i)]) {
                const auto ref = oracle_counts(tokenize_lower(ref_text), n);
                double dot = 0, nc = 0, nr = 0;
                for (const auto& [gram, c] : cand) {
                    const double w = c * idf(gram);
                    nc += w * w;
                    auto it = ref.find(gram);
                    if (it != ref.end()) {
                        dot += w * (it->second * idf(gram));
                    }
                }
                for (const auto& [gram, c] : ref) {
                    const double w = c * idf(gram);
                    nr += w * w;
                }
                if (nc > 0 && nr > 0) {
                    per_ref += dot / (std::sqrt(nc) * std::sqrt(nr));
                }
            }
            corpus += 10.0 / 4.0 * per_ref /
                      static_cast<double>(references[static_cast<std::size_t>(i)].size());
        }
    }
    return corpus / big_n;
}

} // namespace

TEST_CASE("iou3") {
    CHECK(iou3(box(0, 0, 0), box(0, 0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(iou3(box(0, 0, 0), box(5, 0, 0)) == 0.0);
    // Unit cubes offset by 0.5 along x: intersection 0.5, union 1.5.
    CHECK(std::abs(iou3(box(0, 0, 0), box(0.5, 0, 0)) - 1.0 / 3.0) < 1e-9);

    SUBCASE("Monte Carlo voxel oracle agrees on the offset cube") {
        Rng rng(1234);
        int inter = 0, uni = 0;
        for (int i = 0; i < 1000000; ++i) {
            // Sample within the union's bounding slab; y and z stay inside
            // both cubes, so only x decides membership.
            const double x = rng.uniform(-0.5, 1.0);
            const bool in_a = x >= -0.5 && x <= 0.5;
            const bool in_b = x >= 0.0 && x <= 1.0;
            if (in_a && in_b) ++inter;
            if (in_a || in_b) ++uni;
        }
        const double mc = static_cast<double>(inter) / uni;
        CHECK(std::abs(mc - iou3(box(0, 0, 0), box(0.5, 0, 0))) < 5e-3);
    }

    SUBCASE("symmetry and range on random boxes") {
        Rng rng(55);
        for (int i = 0; i < 300; ++i) {
            const Box3 a = box(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                               rng.uniform(0.1, 3), rng.uniform(0.1, 3), rng.uniform(0.1, 3));
            const Box3 b = box(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                               rng.uniform(0.1, 3), rng.uniform(0.1, 3), rng.uniform(0.1, 3));
            const double ab = iou3(a, b);
            CHECK(ab == iou3(b, a));
            CHECK(ab >= 0.0);
            CHECK(ab <= 1.0);
            CHECK(iou3(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("grounding_accuracy") {
    std::vector<Box3> gts{box(0, 0, 0), box(3, 0, 0), box(6, 0, 0), box(9, 0, 0)};
    CHECK(grounding_accuracy(gts, gts, 0.5) == 1.0);

    std::vector<Box3> preds{box(0, 0, 0), box(30, 0, 0), box(60, 0, 0), box(90, 0, 0)};
    CHECK(grounding_accuracy(preds, gts, 0.25) == doctest::Approx(0.25));

    CHECK_THROWS_AS(grounding_accuracy({box(0, 0, 0)}, gts, 0.5), LengthMismatch);

    SUBCASE("random pairs equal an independent recount") {
        Rng rng(66);
        std::vector<Box3> p, g;
        for (int i = 0; i < 50; ++i) {
            p.push_back(box(rng.uniform(-1, 1), rng.uniform(-1, 1), 0));
            g.push_back(box(rng.uniform(-1, 1), rng.uniform(-1, 1), 0));
        }
        for (double threshold : {0.25, 0.5}) {
            int count = 0;
            for (int i = 0; i < 50; ++i) {
                if (iou3(p[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(i)]) >=
                    threshold) {
                    ++count;
                }
            }
            CHECK(grounding_accuracy(p, g, threshold) ==
                  doctest::Approx(count / 50.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("multi_object_f1") {
    std::vector<Box3> three{box(0, 0, 0), box(3, 0, 0), box(6, 0, 0)};
    CHECK(multi_object_f1(three, three, 0.5) == doctest::Approx(1.0));
    CHECK(multi_object_f1({}, {}, 0.5) == 1.0);
    CHECK(multi_object_f1({}, three, 0.5) == 0.0);
    CHECK(multi_object_f1(three, {}, 0.5) == 0.0);

    SUBCASE("two predictions, three truths, both valid: P=1, R=2/3, F1=0.8") {
        std::vector<Box3> preds{box(0, 0, 0), box(3, 0, 0)};
        std::vector<Box3> gts{box(0, 0, 0), box(3, 0, 0), box(50, 0, 0)};
        CHECK(multi_object_f1(preds, gts, 0.5) == doctest::Approx(0.8).epsilon(1e-12));
    }

    SUBCASE("invariant under permutation of either set") {
        Rng rng(67);
        std::vector<Box3> preds, gts;
        for (int i = 0; i < 8; ++i) {
            preds.push_back(box(rng.uniform(-3, 3), rng.uniform(-3, 3), 0));
            gts.push_back(box(rng.uniform(-3, 3), rng.uniform(-3, 3), 0));
        }
        const double base = multi_object_f1(preds, gts, 0.25);
        std::reverse(preds.begin(), preds.end());
        CHECK(multi_object_f1(preds, gts, 0.25) == doctest::Approx(base).epsilon(1e-12));
        std::reverse(gts.begin(), gts.end());
        CHECK(multi_object_f1(preds, gts, 0.25) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("exact match and its refined variant") {
    CHECK(exact_match("The chair.", "chair") == 1);
    CHECK(exact_match("it is a brown chair", "brown chair") == 0);
    CHECK(em_refined("it is a brown chair", "brown chair") == 1);
    CHECK(exact_match("table", "chair") == 0);
    CHECK(em_refined("table", "chair") == 0);
    // Containment is over the normalized strings.
    CHECK(em_refined("A   Brown,  CHAIR!", "brown chair") == 1);
    CHECK(em_refined("brown chair", "it is a brown chair") == 0);
}

TEST_CASE("bleu4 and rouge_l") {
    const std::vector<std::string> cand{"the red chair stands near the window"};
    const std::vector<std::vector<std::string>> refs{{"the red chair stands near the window"}};
    CHECK(bleu4(cand, refs) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rouge_l(cand, refs) == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("zero n-gram overlap collapses toward zero") {
        const std::vector<std::string> off{"purple elephants fly south"};
        const std::vector<std::vector<std::string>> gt{{"the red chair stands near the window"}};
        CHECK(bleu4(off, gt) < 1e-6);
        CHECK(rouge_l(off, gt) == 0.0);
        CHECK(meteor_simplified(off, gt) == 0.0);
        CHECK(cider(off, gt) == 0.0);
    }

    SUBCASE("reference order does not matter") {
        const std::vector<std::string> c{"a cat sat on the mat"};
        const std::vector<std::vector<std::string>> fwd{
            {"a cat sat on the mat", "the cat is sitting on a mat"}};
        const std::vector<std::vector<std::string>> rev{
            {"the cat is sitting on a mat", "a cat sat on the mat"}};
        CHECK(bleu4(c, fwd) == doctest::Approx(bleu4(c, rev)).epsilon(1e-12));
        CHECK(rouge_l(c, fwd) == doctest::Approx(rouge_l(c, rev)).epsilon(1e-12));
        CHECK(meteor_simplified(c, fwd) ==
              doctest::Approx(meteor_simplified(c, rev)).epsilon(1e-12));
        CHECK(cider(c, fwd) == doctest::Approx(cider(c, rev)).epsilon(1e-12));
    }

    SUBCASE("brevity penalty pushes short candidates below 1") {
        const std::vector<std::string> shorty{"the red chair"};
        const std::vector<std::vector<std::string>> gt{
            {"the red chair stands near the window"}};
        CHECK(bleu4(shorty, gt) < 1.0);
    }

    SUBCASE("empty corpus raises") {
        CHECK_THROWS_AS(bleu4({}, {}), EmptyCorpus);
        CHECK_THROWS_AS(bleu4({"a"}, {{"a"}, {"b"}}), LengthMismatch);
        CHECK_THROWS_AS(cider({"a"}, {{}}), EmptyCorpus);
    }
}

TEST_CASE("meteor rewards in-order matches") {
    const std::vector<std::vector<std::string>> refs{{"the cat sat on the mat"}};
    const double aligned = meteor_simplified({"the cat sat on the mat"}, refs);
    const double scrambled = meteor_simplified({"mat the on sat cat the"}, refs);
    CHECK(aligned > 0.9);
    CHECK(scrambled < aligned);

    // Stem matches count: "sitting"/"sat" do not share a stem, but
    // "navigate"/"navigating" do.
    const double stems = meteor_simplified(
        {"navigating to the table"}, {{"navigate to the table"}});
    CHECK(stems > 0.8);
}

TEST_CASE("cider matches the independent tf-idf oracle") {
    SUBCASE("two-sentence toy corpus") {
        const std::vector<std::string> candidates{
            "a brown chair near the table",
            "the lamp sits on the desk"};
        const std::vector<std::vector<std::string>> references{
            {"a brown chair by the table", "a chair next to a table"},
            {"a lamp on the desk", "the desk lamp glows"}};
        const double mine = cider(candidates, references);
        const double oracle = oracle_cider(candidates, references);
        CHECK(mine == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(mine > 0.0);
        CHECK(mine <= 10.0);
    }

    SUBCASE("ten-sentence corpus") {
        std::vector<std::string> candidates;
        std::vector<std::vector<std::string>> references;
        const char* labels[] = {"chair", "table", "lamp", "sofa", "desk",
                                "bed", "shelf", "plant", "stool", "rug"};
        for (int i = 0; i < 10; ++i) {
            candidates.push_back(std::string("a ") + labels[i] + " in the corner of the room");
            references.push_back({std::string("the ") + labels[i] + " stands in the corner",
                                  std::string("a ") + labels[i] + " near the wall"});
        }
        const double mine = cider(candidates, references);
        const double oracle = oracle_cider(candidates, references);
        CHECK(mine == doctest::Approx(oracle).epsilon(1e-6));
    }

    SUBCASE("identical corpus scores 10") {
        const std::vector<std::string> candidates{"a b c d e", "f g h i j"};
        const std::vector<std::vector<std::string>> references{{"a b c d e"}, {"f g h i j"}};
        CHECK(cider(candidates, references) == doctest::Approx(10.0).epsilon(1e-9));
    }
}

TEST_CASE("parse_plan extracts verbs and references") {
    const auto steps = parse_plan("1. Navigate to the [table-0]\n"
                                  "2. Pick up the [red mug-3] beside the [lamp-7]\n"
                                  "\n"
                                  "3) Place it on the [table-0]");
    REQUIRE(steps.size() == 3);
    CHECK(steps[0].action_verb == "navigate");
    REQUIRE(steps[0].target_refs.size() == 1);
    CHECK(steps[0].target_refs[0] == std::pair<std::string, int>{"table", 0});
    CHECK(steps[1].action_verb == "pick");
    REQUIRE(steps[1].target_refs.size() == 2);
    CHECK(steps[1].target_refs[0] == std::pair<std::string, int>{"red mug", 3});
    CHECK(steps[1].target_refs[1] == std::pair<std::string, int>{"lamp", 7});
    CHECK(steps[2].action_verb == "place");

    CHECK_THROWS_AS(parse_plan("1. !!!"), ParseError);
    CHECK_THROWS_AS(parse_plan("2 4 6"), ParseError);

    SUBCASE("reference multiset equals an independent extraction oracle") {
        Rng rng(71);
        const char* verbs[] = {"navigate", "pick", "place", "clean", "open"};
        const char* labels[] = {"table", "chair", "lamp", "sofa"};
        for (int trial = 0; trial < 50; ++trial) {
            std::string plan;
            std::multiset<std::pair<std::string, int>> expected;
            const int n_steps = rng.uniform_int(1, 6);
            for (int s = 0; s < n_steps; ++s) {
                plan += std::to_string(s + 1) + ". " + verbs[rng.uniform_int(0, 4)];
                const int n_refs = rng.uniform_int(0, 3);
                for (int r = 0; r < n_refs; ++r) {
                    const std::string label = labels[rng.uniform_int(0, 3)];
                    const int id = rng.uniform_int(0, 9);
                    plan += " to the [" + label + "-" + std::to_string(id) + "]";
                    expected.insert({label, id});
                }
                plan += "\n";
            }
            std::multiset<std::pair<std::string, int>> got;
            for (const PlanStep& step : parse_plan(plan)) {
                for (const auto& ref : step.target_refs) {
                    got.insert(ref);
                }
            }
            CHECK(got == expected);
        }
    }
}

TEST_CASE("plan_scores") {
    const auto gt = parse_plan("1. Navigate to the [table-0]\n"
                               "2. Pick up the [mug-3]\n"
                               "3. Place the [mug-3] on the [desk-1]\n"
                               "4. Clean the [desk-1]");

    SUBCASE("identical plans score (1, 1.0)") {
        const auto score = plan_scores(gt, gt);
        CHECK(score.g_acc == 1);
        CHECK(score.t_acc == doctest::Approx(1.0));
    }

    SUBCASE("missing last of four steps scores (0, 0.75)") {
        const auto pred = parse_plan("1. Navigate to the [table-0]\n"
                                     "2. Pick up the [mug-3]\n"
                                     "3. Place the [mug-3] on the [desk-1]");
        const auto score = plan_scores(pred, gt);
        CHECK(score.g_acc == 0);
        CHECK(score.t_acc == doctest::Approx(0.75));
    }

    SUBCASE("stemmed verbs match across inflections") {
        const auto pred = parse_plan("1. Navigating to the [table-0]\n"
                                     "2. Picking up the [mug-3]\n"
                                     "3. Placing the [mug-3] on the [desk-1]\n"
                                     "4. Cleaning the [desk-1]");
        const auto score = plan_scores(pred, gt);
        CHECK(score.g_acc == 1);
        CHECK(score.t_acc == doctest::Approx(1.0));
    }

    SUBCASE("shuffled steps match the index-aligned recount oracle") {
        const auto pred = parse_plan("1. Pick up the [mug-3]\n"
                                     "2. Navigate to the [table-0]\n"
                                     "3. Place the [mug-3] on the [desk-1]\n"
                                     "4. Clean the [desk-1]");
        const auto score = plan_scores(pred, gt);
        // Oracle: recount matches by hand under the stated rule.
        int matched = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            std::set<int> a, b;
            for (const auto& r : pred[i].target_refs) a.insert(r.second);
            for (const auto& r : gt[i].target_refs) b.insert(r.second);
            if (porter_stem(pred[i].action_verb) == porter_stem(gt[i].action_verb) && a == b) {
                ++matched;
            }
        }
        CHECK(score.t_acc == doctest::Approx(matched / 4.0));
        CHECK(score.g_acc == 0);  // steps 1 and 2 disagree
    }

    SUBCASE("ref-id unions must match for task-level credit") {
        const auto pred = parse_plan("1. Navigate to the [table-0]\n"
                                     "2. Pick up the [mug-3]\n"
                                     "3. Place the [mug-3] on the [desk-1]\n"
                                     "4. Clean the [sofa-9]");
        const auto score = plan_scores(pred, gt);
        CHECK(score.g_acc == 0);
        CHECK(score.t_acc == doctest::Approx(0.75));
    }
}

TEST_CASE("format_report prints the metric table with the plan-rule header") {
    const std::string table = format_report({{"bleu4", 1.0}, {"g_acc", 0.5}});
    CHECK(table.find("g_acc") != std::string::npos);
    CHECK(table.find("stemmed verb") != std::string::npos);
    CHECK(table.find("1.000000") != std::string::npos);
}
