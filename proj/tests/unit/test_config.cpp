#include <doctest.h>

#include "scenelang/errors.hpp"
#include "scenelang/pipeline_config.hpp"
#include "test_util.hpp"

using namespace scenelang;
using test_util::TempDir;
using test_util::write_file;

TEST_CASE("pipeline config parses the TOML subset") {
    TempDir dir;
    write_file(dir.file("config.toml"), R"(# pipeline settings
mode = "simple"
jobs = 2

[reasoner]
beta = 1.5          # proximity factor
theta_tol_deg = 25.0
n_sectors = 12
saliency_m = 4
nearby_exclusive = false
vertical_axis = "world_up"

[selection]
k1 = 18
k2 = 9
rounds = 1

[reflection]
tau = 0.7
rounds = 2

[providers]
caption_endpoint = "http://localhost:9000/refine"
timeout_ms = 500
max_in_flight = 2
)");
    const PipelineConfig cfg = load_pipeline_config(dir.file("config.toml"));
    CHECK(cfg.mode == ExpressionMode::Simple);
    CHECK(cfg.jobs == 2);
    CHECK(cfg.reasoner.beta == doctest::Approx(1.5));
    CHECK(cfg.reasoner.theta_tol_deg == doctest::Approx(25.0));
    CHECK(cfg.reasoner.saliency_m == 4);
    CHECK_FALSE(cfg.reasoner.nearby_exclusive);
    CHECK(cfg.reasoner.vertical_axis == VerticalAxis::WorldUp);
    CHECK(cfg.selection.k1 == 18);
    CHECK(cfg.selection.k2 == 9);
    CHECK(cfg.selection.rounds == 1);
    CHECK(cfg.reflection.tau == doctest::Approx(0.7));
    CHECK(cfg.reflection.rounds == 2);
    CHECK(cfg.providers.caption_endpoint == "http://localhost:9000/refine");
    CHECK(cfg.providers.timeout_ms == 500);
    CHECK(cfg.providers.max_in_flight == 2);
}

TEST_CASE("unknown keys and malformed lines are schema errors") {
    TempDir dir;
    write_file(dir.file("unknown.toml"), "[reasoner]\nbetta = 2.0\n");
    CHECK_THROWS_AS(load_pipeline_config(dir.file("unknown.toml")), SchemaError);

    write_file(dir.file("broken.toml"), "[reasoner\nbeta = 2.0\n");
    CHECK_THROWS_AS(load_pipeline_config(dir.file("broken.toml")), SchemaError);

    write_file(dir.file("novalue.toml"), "beta\n");
    CHECK_THROWS_AS(load_pipeline_config(dir.file("novalue.toml")), SchemaError);
}

TEST_CASE("config values are validated") {
    TempDir dir;
    write_file(dir.file("badk.toml"), "[selection]\nk1 = 5\nk2 = 9\n");
    CHECK_THROWS_AS(load_pipeline_config(dir.file("badk.toml")), InvalidK);

    write_file(dir.file("badtau.toml"), "[reflection]\ntau = 1.5\n");
    CHECK_THROWS_AS(load_pipeline_config(dir.file("badtau.toml")), ValidationError);

    write_file(dir.file("badbeta.toml"), "[reasoner]\nbeta = -2.0\n");
    CHECK_THROWS_AS(load_pipeline_config(dir.file("badbeta.toml")), ValidationError);

    write_file(dir.file("badrounds.toml"), "[selection]\nrounds = 3\n");
    CHECK_THROWS_AS(load_pipeline_config(dir.file("badrounds.toml")), ValidationError);
}

TEST_CASE("defaults survive an empty config") {
    TempDir dir;
    write_file(dir.file("empty.toml"), "\n");
    const PipelineConfig cfg = load_pipeline_config(dir.file("empty.toml"));
    CHECK(cfg.reasoner.beta == doctest::Approx(1.0));
    CHECK(cfg.reasoner.theta_tol_deg == doctest::Approx(30.0));
    CHECK(cfg.reasoner.n_sectors == 12);
    CHECK(cfg.reasoner.saliency_m == 5);
    CHECK(cfg.reasoner.nearby_exclusive);
    CHECK(cfg.selection.k1 == 20);
    CHECK(cfg.selection.k2 == 12);
    CHECK(cfg.reflection.tau == doctest::Approx(0.5));
    CHECK(cfg.mode == ExpressionMode::Complex);
}
