#include "helpers.hpp"

#include "mvd/config.hpp"

#include <doctest.h>

using namespace mvd;

TEST_SUITE("config") {

TEST_CASE("defaults")
{
    const PipelineConfig c;
    c.validate();
    CHECK(c.weights.w1 == 1.0);
    CHECK(c.weights.w2 == 1.0);
    CHECK(c.weights.w3 == 0.001);
    CHECK(c.weights.w4 == 1.0);
    CHECK(c.weights.w5 == 0.1);
    CHECK(c.weights.w6 == 1e5);
    CHECK(c.refine_weights.expansion == 0.1);
    CHECK(c.refine_weights.laplacian == 1e5);
    CHECK(c.iterations_fidelity == 200);
    CHECK(c.iterations_camera == 100);
    CHECK(c.grid_size == 20);
    CHECK(c.fscore_threshold == 0.2);
}

TEST_CASE("text round trip")
{
    PipelineConfig c;
    c.weights.w3 = 0.25;
    c.iterations_refine = 7;
    c.seed = 42;
    c.output_dir = "out dir";
    CHECK(config_from_text(config_to_text(c)) == c);
    CHECK(config_from_text(config_to_text(PipelineConfig{})) == PipelineConfig{});

    const auto path = test::temp_dir("config") / "pipeline.cfg";
    write_config(path, c);
    CHECK(read_config(path) == c);

    const PipelineConfig d = config_from_text("# comment\n  w6 = 10 \n\nresolution=128 # trailing\n");
    CHECK(d.weights.w6 == 10.0);
    CHECK(d.resolution == 128);
}

TEST_CASE("errors")
{
    CHECK_THROWS_WITH_AS(config_from_text("w7 = 1\n"), doctest::Contains("w7"), Error);
    CHECK_THROWS_AS(config_from_text("resolution = abc\n"), Error);
    CHECK_THROWS_AS(config_from_text("resolution\n"), Error);
    CHECK_THROWS_AS(config_from_text("iterations_fidelity = -1\n"), Error);
    CHECK_THROWS_AS(read_config(test::temp_dir("config_missing") / "nope.cfg"), Error);

    PipelineConfig c;
    set_config_value(c, "w1", "0.5");
    CHECK(c.weights.w1 == 0.5);
    CHECK_THROWS_AS(set_config_value(c, "bogus", "1"), Error);
    CHECK_THROWS_AS(set_config_value(c, "resolution", "12x"), Error);
}

} // TEST_SUITE
