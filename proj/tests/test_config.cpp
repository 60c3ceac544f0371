#include <doctest.h>

#include <cmath>

#include "fecim/config.hpp"
#include "fecim/errors.hpp"

using namespace fecim;

TEST_CASE("defaults are valid and hash-stable") {
    RunConfig config;
    CHECK_NOTHROW(config.validate());
    CHECK(config.rows == 128);
    CHECK(config.cols == 128);
    CHECK(config.c_m == 1.2e-15);
    CHECK(config.v_dd == 0.45);
    CHECK(config.v_write == 1.5);
    CHECK(config_hash(config) == config_hash(RunConfig{}));
}

TEST_CASE("INI parsing with sections, comments, and overrides") {
    const std::string text = R"(
# device overrides
[device]
v_dd = 0.6        ; inline comment
v_write = 2.0

[array]
rows = 64
cols = 32

[variation]
sigma_c = 0.1
on_off_ratio = inf
seed = 99

[sweep]
p_grid = 0.0, 0.5, 1.0
trials = 500
sigma_squared = false
)";
    const RunConfig config = parse_config(text);
    CHECK(config.v_dd == 0.6);
    CHECK(config.v_write == 2.0);
    CHECK(config.rows == 64);
    CHECK(config.cols == 32);
    CHECK(config.sigma_c == 0.1);
    CHECK(std::isinf(config.on_off_ratio));
    CHECK(config.seed == 99);
    CHECK(config.p_grid == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(config.trials == 500);
    CHECK_FALSE(config.sigma_squared);
    CHECK_NOTHROW(config.validate());
    CHECK(config_hash(config) != config_hash(RunConfig{}));
}

TEST_CASE("parse errors are actionable") {
    CHECK_THROWS_AS(parse_config("[device]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[device]\nv_dd 0.45\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[device]\nv_dd = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[device\nv_dd = 0.45\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/fecim.ini"), ConfigError);
}

TEST_CASE("validation rejects compute rail at or above the write voltage") {
    RunConfig config;
    config.v_dd = 1.5;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.v_dd = 1.6;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = RunConfig{};
    config.trials = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = RunConfig{};
    config.sigma_c_grid = {0.6};
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("echo round-trips through the parser") {
    RunConfig config;
    config.v_dd = 0.5;
    config.seed = 1234;
    config.p_grid = {0.1, 0.9};
    const RunConfig back = parse_config(config_echo(config));
    CHECK(config_hash(back) == config_hash(config));
}
