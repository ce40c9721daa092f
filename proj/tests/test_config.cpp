#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "json.hpp"

#include "pvagg/config.hpp"
#include "pvagg/errors.hpp"

using namespace pvagg;
using nlohmann::json;

namespace {

std::string error_key(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

}  // namespace

TEST_CASE("defaults are valid and match the shipped file") {
    const auto d = default_config();
    CHECK_NOTHROW(d.validate());
    CHECK(d.validation.fleet.size() == 10);
    CHECK(d.event.fleet().size() == 40);
    CHECK(d.event.feeders.size() == 4);
    const auto f = load_config_file(PVAGG_SOURCE_DIR "/configs/default.json");
    CHECK(json::parse(config_to_json(f)) == json::parse(config_to_json(d)));
}

TEST_CASE("empty document yields the defaults") {
    CHECK(json::parse(config_to_json(parse_config("{}"))) == json::parse(config_to_json(default_config())));
}

TEST_CASE("round trip through JSON") {
    auto c = default_config();
    c.grid.h_g = 4.5;
    c.controller.weights.error = 3e4;
    c.mcs.trials = 1234;
    c.run.seed = 99;
    c.event.plant = PlantModel::aggregate;
    c.validation.dv_pv[3] = -1.25;
    const auto back = parse_config(config_to_json(c));
    CHECK(back.grid.h_g == 4.5);
    CHECK(back.controller.weights.error == 3e4);
    CHECK(back.mcs.trials == 1234);
    CHECK(back.run.seed == 99);
    CHECK(back.event.plant == PlantModel::aggregate);
    CHECK(back.validation.dv_pv[3] == -1.25);
    CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("partial overlay keeps the other defaults") {
    const auto c = parse_config(R"({"grid": {"H_g": 7.0}, "run": {"seed": 5}})");
    CHECK(c.grid.h_g == 7.0);
    CHECK(c.grid.r_g == default_config().grid.r_g);
    CHECK(c.run.seed == 5);
}

TEST_CASE("errors name the offending key") {
    CHECK(error_key(R"({"grid": {"H_gg": 1}})") == "grid.H_gg");
    CHECK(error_key(R"({"gird": {}})") == "gird");
    CHECK(error_key(R"({"grid": {"H_g": "five"}})") == "grid.H_g");
    CHECK(error_key(R"({"grid": {"H_g": -1}})") == "grid.H_g");
    CHECK(error_key(R"({"controller": {"weights": {"state": -1}}})") == "controller.weights.state");
    CHECK(error_key(R"({"controller": {"saturate": 1}})") == "controller.saturate");
    CHECK(error_key(R"({"event": {"plant": "detailed"}})") == "event.plant");
    CHECK(error_key(R"({"event": {"t_event_s": 5, "t_end_s": 2}})") == "event.t_end_s");
    CHECK(error_key(R"({"run": {"parallel": 0}})") == "run.parallel");
    CHECK(error_key(R"({"mcs": {"trials": -3}})") == "mcs.trials");
    CHECK(error_key(R"({"mcs": {"mu_p": [1]}})") == "mcs.mu_p");
    CHECK(error_key(R"({"panel": {"dv_grid": {"lo": -10, "hi": 20, "step": 0.5}}})") == "panel.dv_grid");
    CHECK(error_key(R"({"validation": {"dV_PV": [1, 2]}})") == "validation.dV_PV");
    CHECK(error_key(R"({"validation": {"fleet": {"S": [50], "P_r_kw": [100, 200], "k_p": [1], "k_i": [1]}}})") ==
          "validation.fleet.P_r_kw");
    CHECK(error_key("[1, 2]") == "<root>");
    CHECK(error_key("{ not json") == "<root>");
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), ConfigError);
}
