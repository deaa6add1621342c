#include <catch2/catch_amalgamated.hpp>

#include "genrank/config.hpp"

using namespace genrank;

TEST_CASE("config text parses sections into dotted keys", "[config]") {
    auto kv = parse_config_text(
        "# comment\n"
        "run_tag = exp1\n"
        "\n"
        "[backend]\n"
        "base_url = http://localhost:9\n"
        "max_retries = 0\n"
        "[reranker]\n"
        "strategy = pairwise\n");
    CHECK(kv.at("run_tag") == "exp1");
    CHECK(kv.at("backend.base_url") == "http://localhost:9");
    CHECK(kv.at("reranker.strategy") == "pairwise");

    CHECK_THROWS_AS(parse_config_text("[unterminated\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("novalue\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("= x\n"), ParseError);
}

TEST_CASE("config map populates RunConfig with defaults and overrides", "[config]") {
    RunConfig cfg = config_from_map({});
    CHECK(cfg.k_eval == 10);
    CHECK(cfg.reranker.rerank_depth == 100);
    CHECK(cfg.reranker.window == 20);
    CHECK(cfg.reranker.stride == 10);
    CHECK(cfg.backend.api_key_env == "GENRANK_API_KEY");
    CHECK(cfg.backend.max_inflight == 4);
    CHECK(cfg.bm25.k1 == 1.2);
    CHECK(cfg.bm25.b == 0.75);

    RunConfig custom = config_from_map({{"reranker.strategy", "pointwise"},
                                        {"reranker.window", "5"},
                                        {"reranker.stride", "2"},
                                        {"backend.kind", "oracle"},
                                        {"bm25.k1", "0.9"},
                                        {"k_eval", "20"}});
    CHECK(custom.reranker.strategy == Strategy::pointwise);
    CHECK(custom.reranker.window == 5);
    CHECK(custom.backend_kind == BackendKind::oracle);
    CHECK(custom.bm25.k1 == 0.9);
    CHECK(custom.k_eval == 20);
}

TEST_CASE("config rejects unknown keys and bad values", "[config]") {
    CHECK_THROWS_AS(config_from_map({{"typo_key", "1"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"run_tag", "has space"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"run_tag", ""}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"k_eval", "zero"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"k_eval", "0"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"bm25.b", "1.5"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"reranker.strategy", "psychic"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"backend.kind", "carrier-pigeon"}}), ConfigError);
}

TEST_CASE("stage specs parse names and integer parameters", "[config]") {
    auto specs = parse_stage_specs("retrieve:100 get_text rerank cut:10");
    REQUIRE(specs.size() == 4);
    CHECK(specs[0].name == "retrieve");
    CHECK(specs[0].param == 100);
    CHECK(specs[1].name == "get_text");
    CHECK_FALSE(specs[1].param.has_value());
    CHECK(specs[3].param == 10);

    CHECK(parse_stage_specs("").empty());
    CHECK_THROWS_AS(parse_stage_specs("cut:abc"), ConfigError);
    CHECK_THROWS_AS(parse_stage_specs("cut:0"), ConfigError);
}

TEST_CASE("referenced input paths are checked eagerly", "[config]") {
    RunConfig cfg = config_from_map({{"queries_path", "/nonexistent/queries.tsv"}});
    CHECK_THROWS_AS(check_config_paths(cfg), ConfigError);
    CHECK_NOTHROW(check_config_paths(config_from_map({})));
}
