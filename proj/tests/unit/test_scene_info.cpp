#include <doctest.h>

#include <set>

#include "scenelang/errors.hpp"
#include "scenelang/scene_info.hpp"
#include "test_util.hpp"

using namespace scenelang;

namespace {

ObjectIndex two_object_index() {
    ObjectIndex index;
    index[0] = {"table", {2.0, 0.0, 0.0}, {2.0, 1.0, 1.5}};
    index[2] = {"chair", {0.0, 1.0, 0.5}, {1.0, 1.0, 1.0}};
    return index;
}

RelationTriplet triplet(int subject, int object, std::vector<RelationTag> tags,
                        double distance, std::optional<double> theta = std::nullopt) {
    RelationTriplet t;
    t.subject_id = subject;
    t.object_id = object;
    t.tags = std::move(tags);
    t.distance_m = distance;
    t.theta_deg = theta;
    return t;
}

std::vector<ObjectCaption> captions_for(const Scene& scene) {
    std::vector<ObjectCaption> captions;
    for (const SceneObject& obj : scene.objects) {
        ObjectCaption c;
        c.object_id = obj.id;
        c.text = "a " + obj.label;
        captions.push_back(std::move(c));
    }
    return captions;
}

} // namespace

TEST_CASE("render_relation templates") {
    const ObjectIndex index = two_object_index();

    SUBCASE("simple mode uses one coarse phrase") {
        const auto t = triplet(2, 0,
                               {RelationTag::simple(RelationTag::Kind::InFrontOf),
                                RelationTag::oclock(12)},
                               5.0, 0.0);
        CHECK(render_relation(t, index, ExpressionMode::Simple) ==
              "The chair [chair-2] is in front of the table [table-0].");
    }

    SUBCASE("complex mode joins tags with o'clock and distance") {
        ObjectIndex lamp_desk;
        lamp_desk[5] = {"lamp", {0, 0, 0}, {1, 1, 1}};
        lamp_desk[1] = {"desk", {0, 0, 0}, {1, 1, 1}};
        const auto t = triplet(5, 1,
                               {RelationTag::simple(RelationTag::Kind::Above),
                                RelationTag::simple(RelationTag::Kind::RightOf),
                                RelationTag::oclock(3)},
                               2.04, 90.0);
        CHECK(render_relation(t, lamp_desk, ExpressionMode::Complex) ==
              "The lamp [lamp-5] is above and to the right of the desk [desk-1], "
              "at 3 o'clock, about 2.0 m away.");
    }

    SUBCASE("prior text is rendered verbatim in both modes") {
        const auto t = triplet(2, 0, {RelationTag::prior("tucked under")}, 1.0);
        const std::string expected = "The chair [chair-2] is tucked under the table [table-0].";
        CHECK(render_relation(t, index, ExpressionMode::Simple) == expected);
        CHECK(render_relation(t, index, ExpressionMode::Complex) == expected);
    }

    SUBCASE("nearby-only edges carry the distance in complex mode") {
        const auto t = triplet(2, 0, {RelationTag::simple(RelationTag::Kind::Nearby)}, 0.55);
        CHECK(render_relation(t, index, ExpressionMode::Simple) ==
              "The chair [chair-2] is nearby the table [table-0].");
        CHECK(render_relation(t, index, ExpressionMode::Complex) ==
              "The chair [chair-2] is nearby the table [table-0], about 0.6 m away.");
    }

    SUBCASE("coordinate mode renders the subject's position and extents") {
        const auto t = triplet(2, 0, {RelationTag::simple(RelationTag::Kind::Nearby)}, 0.5);
        CHECK(render_relation(t, index, ExpressionMode::Coordinate) ==
              "The chair [chair-2] is at (0.0, 1.0, 0.5) with size (1.0, 1.0, 1.0).");
    }

    SUBCASE("unknown ids raise") {
        const auto t = triplet(9, 0, {RelationTag::simple(RelationTag::Kind::Nearby)}, 0.5);
        CHECK_THROWS_AS(render_relation(t, index, ExpressionMode::Simple), UnknownId);
    }
}

TEST_CASE("build_scene_information assembles the three sections") {
    const Scene scene = generate_synthetic_scene(8, 6, default_room_extent());
    PriorTable priors;
    ReasonerConfig cfg;
    const auto graph = build_scene_graph(scene, priors, cfg);
    const auto captions = captions_for(scene);

    SUBCASE("empty graph keeps zero relation sentences") {
        const auto info = build_scene_information(scene, {}, captions,
                                                  ExpressionMode::Simple);
        CHECK(info.relations.empty());
        CHECK(info.captions.size() == scene.objects.size());
        CHECK(info.token_estimate > 0);
    }

    SUBCASE("graph referencing an uncaptioned id raises MissingCaption") {
        auto partial = captions;
        partial.pop_back();
        CHECK_THROWS_AS(
            build_scene_information(scene, graph, partial, ExpressionMode::Simple),
            MissingCaption);
    }

    SUBCASE("re-render is byte-identical") {
        const auto a = build_scene_information(scene, graph, captions,
                                               ExpressionMode::Complex);
        const auto b = build_scene_information(scene, graph, captions,
                                               ExpressionMode::Complex);
        CHECK(to_text(a) == to_text(b));
        CHECK(a.token_estimate == b.token_estimate);
    }

    SUBCASE("relation sentences only reference captioned objects") {
        const auto info = build_scene_information(scene, graph, captions,
                                                  ExpressionMode::Complex);
        std::set<int> caption_ids;
        for (const CaptionEntry& entry : info.captions) {
            caption_ids.insert(entry.object_id);
        }
        for (const RelationSentence& line : info.relations) {
            CHECK(caption_ids.count(line.subject_id) == 1);
            CHECK(caption_ids.count(line.object_id) == 1);
        }
    }

    SUBCASE("coordinate mode emits one line per object") {
        const auto info = build_scene_information(scene, graph, captions,
                                                  ExpressionMode::Coordinate);
        CHECK(info.relations.size() == scene.objects.size());
        for (const RelationSentence& line : info.relations) {
            CHECK(line.subject_id == line.object_id);
        }
    }

    SUBCASE("complex stays under twice simple on a 20-object scene") {
        const Scene big = generate_synthetic_scene(9, 20, default_room_extent());
        const auto big_graph = build_scene_graph(big, priors, cfg);
        const auto big_captions = captions_for(big);
        const auto simple = build_scene_information(big, big_graph, big_captions,
                                                    ExpressionMode::Simple);
        const auto complex_info = build_scene_information(big, big_graph, big_captions,
                                                          ExpressionMode::Complex);
        CHECK(complex_info.token_estimate < 2 * simple.token_estimate);
    }
}

TEST_CASE("token estimates are monotone over the modes in aggregate") {
    PriorTable priors;
    ReasonerConfig cfg;
    long long coordinate = 0, simple = 0, complex_total = 0;
    for (std::uint64_t seed = 50; seed < 70; ++seed) {
        const Scene scene = generate_synthetic_scene(seed, 5 + static_cast<int>(seed % 12),
                                                     default_room_extent());
        const auto graph = build_scene_graph(scene, priors, cfg);
        const auto captions = captions_for(scene);
        coordinate += build_scene_information(scene, graph, captions,
                                              ExpressionMode::Coordinate)
                          .token_estimate;
        simple += build_scene_information(scene, graph, captions, ExpressionMode::Simple)
                      .token_estimate;
        complex_total += build_scene_information(scene, graph, captions,
                                                 ExpressionMode::Complex)
                             .token_estimate;
    }
    CHECK(coordinate <= simple);
    CHECK(simple <= complex_total);
}

TEST_CASE("scene information save/load round-trips") {
    test_util::TempDir dir;
    const Scene scene = generate_synthetic_scene(10, 5, default_room_extent());
    PriorTable priors;
    ReasonerConfig cfg;
    const auto info = build_scene_information(scene, build_scene_graph(scene, priors, cfg),
                                              captions_for(scene), ExpressionMode::Complex);
    save_scene_information(dir.file("info.json"), info);
    const auto loaded = load_scene_information(dir.file("info.json"));
    CHECK(to_text(loaded) == to_text(info));
    CHECK(loaded.token_estimate == info.token_estimate);
    CHECK(loaded.mode == info.mode);
}
