#include <catch2/catch_amalgamated.hpp>

#include "genrank/trec.hpp"

#include <cmath>
#include <random>

using namespace genrank;

TEST_CASE("parse_trec_run reads the 6-column format", "[trec]") {
    auto rankings = parse_trec_run("q1 Q0 d3 1 12.5 bm25\nq1 Q0 d7 2 9.1 bm25");
    REQUIRE(rankings.size() == 1);
    const Ranking& r = rankings[0];
    CHECK(r.query_id == "q1");
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].doc_id == "d3");
    CHECK(r.entries[0].score == 12.5);
    CHECK(r.entries[0].rank == 1);
    CHECK(r.entries[1].doc_id == "d7");
    CHECK(r.entries[1].rank == 2);
}

TEST_CASE("parse_trec_run on empty input", "[trec]") {
    CHECK(parse_trec_run("").empty());
    CHECK(parse_trec_run("\n\n").empty());
}

TEST_CASE("parse_trec_run reports malformed lines with numbers", "[trec]") {
    try {
        parse_trec_run("q1 Q0 d3 1 abc bm25");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 1);
    }

    try {
        parse_trec_run("q1 Q0 d3 1 2.0 tag\nq1 Q0 d4 2 1.0");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }

    CHECK_THROWS_AS(parse_trec_run("q1 Q0 d3 x 2.0 tag"), ParseError);
}

TEST_CASE("parse_trec_run rejects duplicate (qid, docid)", "[trec]") {
    CHECK_THROWS_AS(parse_trec_run("q1 Q0 d3 1 2.0 t\nq1 Q0 d3 2 1.0 t"), ParseError);
}

TEST_CASE("parse_trec_run groups interleaved queries and re-sorts by score", "[trec]") {
    // q1 lines out of score order and interleaved with q2.
    auto rankings = parse_trec_run(
        "q1 Q0 a 1 1.0 t\n"
        "q2 Q0 x 1 9.0 t\n"
        "q1 Q0 b 2 5.0 t\r\n"
        "q2 Q0 y 2 3.0 t\n");
    REQUIRE(rankings.size() == 2);
    CHECK(rankings[0].query_id == "q1");  // first-appearance order
    CHECK(rankings[0].entries[0].doc_id == "b");
    CHECK(rankings[0].entries[0].rank == 1);
    CHECK(rankings[0].entries[1].doc_id == "a");
    CHECK(rankings[1].query_id == "q2");
    CHECK(rankings[1].entries[0].doc_id == "x");
    for (const auto& r : rankings) CHECK_NOTHROW(validate_ranking(r));
}

TEST_CASE("write_trec_run emits 6-decimal scores", "[trec]") {
    Ranking r{"q1", {{"d3", 12.5, 1}}};
    CHECK(write_trec_run({r}, "x") == "q1 Q0 d3 1 12.500000 x\n");
    CHECK(write_trec_run({}, "x").empty());
    CHECK_THROWS_AS(write_trec_run({r}, ""), ConfigError);
    CHECK_THROWS_AS(write_trec_run({r}, "a b"), ConfigError);
}

TEST_CASE("run write/parse round-trip is the identity", "[trec][property]") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> n_queries(1, 5);
    std::uniform_int_distribution<int> n_docs(0, 20);
    std::uniform_real_distribution<double> score(-100.0, 100.0);

    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Ranking> original;
        int nq = n_queries(rng);
        for (int q = 0; q < nq; ++q) {
            std::map<std::string, double> scores;
            int nd = n_docs(rng);
            for (int d = 0; d < nd; ++d)
                scores["doc" + std::to_string(d)] = std::round(score(rng) * 1e4) / 1e4;
            Ranking r = ranking_from_scores("q" + std::to_string(q), scores);
            if (!r.empty()) original.push_back(std::move(r));
        }
        auto parsed = parse_trec_run(write_trec_run(original, "t"));
        REQUIRE(parsed.size() == original.size());
        for (std::size_t i = 0; i < parsed.size(); ++i) {
            CHECK(parsed[i].query_id == original[i].query_id);
            REQUIRE(parsed[i].entries.size() == original[i].entries.size());
            for (std::size_t j = 0; j < parsed[i].entries.size(); ++j) {
                CHECK(parsed[i].entries[j].doc_id == original[i].entries[j].doc_id);
                CHECK(parsed[i].entries[j].rank == original[i].entries[j].rank);
                CHECK(parsed[i].entries[j].score ==
                      Catch::Approx(original[i].entries[j].score).margin(1e-6));
            }
        }
    }
}

TEST_CASE("parse_qrels reads the 4-column format", "[trec]") {
    Qrels q = parse_qrels("q1 0 d3 2");
    CHECK(q.grade("q1", "d3") == 2);
}

TEST_CASE("parse_qrels lets later duplicates override", "[trec]") {
    Qrels q = parse_qrels("q1 0 d3 2\nq1 0 d3 0");
    CHECK(q.grade("q1", "d3") == 0);
    CHECK(q.has_query("q1"));
}

TEST_CASE("parse_qrels rejects bad input", "[trec]") {
    CHECK_THROWS_AS(parse_qrels("q1 0 d3 -1"), ParseError);
    CHECK_THROWS_AS(parse_qrels("q1 0 d3"), ParseError);
    try {
        parse_qrels("q1 0 d1 1\nq1 0 d3 x");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }
}

TEST_CASE("parse_queries_tsv", "[trec]") {
    auto queries = parse_queries_tsv("q1\tindian restaurants\nq2\tcats\n");
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].id == "q1");
    CHECK(queries[0].text == "indian restaurants");
    CHECK(parse_queries_tsv("").empty());
    CHECK_THROWS_AS(parse_queries_tsv("q1 no tab here"), ParseError);
    CHECK_THROWS_AS(parse_queries_tsv("q1\ta\nq1\tb"), ParseError);
}
