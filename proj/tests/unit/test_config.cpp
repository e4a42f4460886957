#include <doctest.h>

#include <fstream>

#include "../support/fixtures.hpp"
#include "nl2sql/config.hpp"
#include "nl2sql/errors.hpp"

using namespace nl2sql;
using nl2sql::testing::TempDir;

TEST_SUITE("config") {

TEST_CASE("profiles pin the filter defaults") {
    PipelineConfig defaults;
    CHECK(defaults.profile == "sft");
    CHECK(defaults.filter.top_k1 == 6);
    CHECK(defaults.filter.top_k2 == 10);

    FilterConfig fewshot = filter_defaults_for_profile("fewshot");
    CHECK(fewshot.top_k1 == 5);
    CHECK(fewshot.top_k2 == 6);
    CHECK_THROWS_AS(filter_defaults_for_profile("typo"), ConfigError);
}

TEST_CASE("document parsing honors profile then explicit overrides") {
    auto doc = nlohmann::ordered_json::parse(R"({
        "profile": "fewshot",
        "filter": {"top_k2": 4},
        "retrieval": {"coarse_candidates": 50},
        "eval": {"ves_runs": 10},
        "token_budget": 2048
    })");
    PipelineConfig config = pipeline_config_from_json(doc);
    CHECK(config.filter.top_k1 == 5);   // from profile
    CHECK(config.filter.top_k2 == 4);   // explicit override wins
    CHECK(config.retrieval.coarse_candidates == 50);
    CHECK(config.retrieval.fine_threshold == 0.85);
    CHECK(config.eval.ves_runs == 10);
    CHECK(config.token_budget == 2048);
    CHECK(config.index.bm25_k1 == 1.2);
    CHECK(config.index.bm25_b == 0.75);
}

TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::ordered_json::parse(
                        R"({"filtre": {}})")),
                    ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::ordered_json::parse(
                        R"({"filter": {"top_k1": 0}})")),
                    ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::ordered_json::parse(
                        R"({"retrieval": {"fine_threshold": 1.5}})")),
                    ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::ordered_json::parse(
                        R"({"filter": {"top_k1": "six"}})")),
                    ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::ordered_json::parse("[]")), ConfigError);
}

TEST_CASE("file loading reports the path and round trips") {
    TempDir dir;
    auto path = dir.file("config.json");
    std::ofstream(path) << R"({"profile": "sft", "demo_count": 5})";
    PipelineConfig config = load_pipeline_config(path);
    CHECK(config.demo_count == 5);

    PipelineConfig back = pipeline_config_from_json(pipeline_config_to_json(config));
    CHECK(back.filter.top_k1 == config.filter.top_k1);
    CHECK(back.demo_count == config.demo_count);
    CHECK(back.gateway.api_key_env == config.gateway.api_key_env);

    CHECK_THROWS_AS(load_pipeline_config(dir.file("nope.json")), IoError);
    std::ofstream(dir.file("broken.json")) << "{";
    CHECK_THROWS_AS(load_pipeline_config(dir.file("broken.json")), ConfigError);
}

}
