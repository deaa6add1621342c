#include <catch2/catch_amalgamated.hpp>

#include "genrank/oracle.hpp"
#include "genrank/rerank.hpp"

#include <atomic>
#include <random>

using namespace genrank;

namespace {

struct CountingBackend : Backend {
    std::string reply;
    std::atomic<int> calls{0};
    explicit CountingBackend(std::string r) : reply(std::move(r)) {}
    ChatResponse complete(const ChatRequest&) override {
        ++calls;
        return ChatResponse{reply, 0, 0};
    }
};

Ranking make_ranking(const std::string& qid, int n) {
    Ranking r;
    r.query_id = qid;
    for (int i = 1; i <= n; ++i)
        r.entries.push_back(ScoredDoc{"d" + std::to_string(i), static_cast<double>(n - i + 1), i});
    return r;
}

std::map<std::string, std::string> texts_for(int n) {
    std::map<std::string, std::string> texts;
    for (int i = 1; i <= n; ++i) texts["d" + std::to_string(i)] = "text d" + std::to_string(i);
    return texts;
}

// Oracle over flat grades, with texts/query registered to match the helpers
// above.
std::shared_ptr<OracleBackend> oracle_for(int n, std::map<std::string, int> grades) {
    auto oracle = oracle_backend({}, std::move(grades));
    for (const auto& [id, text] : texts_for(n)) oracle->register_doc(id, text);
    oracle->register_query(Query{"q1", "testing query"});
    return oracle;
}

std::vector<std::string> ids(const Ranking& r) {
    std::vector<std::string> out;
    for (const auto& e : r.entries) out.push_back(e.doc_id);
    return out;
}

RerankerConfig config(Strategy strategy, std::size_t depth = 100, std::size_t w = 20,
                      std::size_t s = 10) {
    RerankerConfig cfg;
    cfg.strategy = strategy;
    cfg.rerank_depth = depth;
    cfg.window = w;
    cfg.stride = s;
    return cfg;
}

const Query kQuery{"q1", "testing query"};

}  // namespace

// --- output parsing ---------------------------------------------------------

TEST_CASE("parse_permutation handles a clean response", "[rerank]") {
    CHECK(parse_permutation("[2] > [1] > [3]", 3).order == std::vector<std::size_t>{2, 1, 3});
    CHECK(parse_permutation("2 > 1", 2).order == std::vector<std::size_t>{2, 1});
    CHECK(parse_permutation("2,1", 2).order == std::vector<std::size_t>{2, 1});
    CHECK(parse_permutation("The order is 2 then 1.", 2).order == std::vector<std::size_t>{2, 1});
}

TEST_CASE("parse_permutation repairs duplicates, range and omissions", "[rerank]") {
    CHECK(parse_permutation("[2] > [2] > [5]", 3).order == std::vector<std::size_t>{2, 1, 3});
    CHECK(parse_permutation("[7] > [9]", 3).order == std::vector<std::size_t>{1, 2, 3});
    CHECK(parse_permutation("[3]", 3).order == std::vector<std::size_t>{3, 1, 2});
}

TEST_CASE("parse_permutation without integers is unparseable", "[rerank]") {
    CHECK_THROWS_AS(parse_permutation("no numbers here", 3), UnparseableResponseError);
}

TEST_CASE("parse_permutation always yields a full permutation", "[rerank][property]") {
    std::mt19937 rng(31);
    const std::string pieces = "[]>,.17 29x0 ab:;-";
    std::uniform_int_distribution<int> len(1, 30);
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<std::size_t> window(1, 12);
    for (int trial = 0; trial < 300; ++trial) {
        std::string response;
        int n = len(rng);
        for (int i = 0; i < n; ++i) response += pieces[pick(rng)];
        std::size_t w = window(rng);
        std::vector<std::size_t> order;
        try {
            order = parse_permutation(response, w).order;
        } catch (const UnparseableResponseError&) {
            continue;
        }
        std::vector<std::size_t> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> expect(w);
        for (std::size_t i = 0; i < w; ++i) expect[i] = i + 1;
        CHECK(sorted == expect);
    }
}

TEST_CASE("parse_pointwise_score clamps to the grade scale", "[rerank]") {
    CHECK(parse_pointwise_score("2", 3) == 2);
    CHECK(parse_pointwise_score("Relevance: 7", 3) == 3);
    CHECK_THROWS_AS(parse_pointwise_score("highly relevant", 3), UnparseableResponseError);
}

// --- pointwise ---------------------------------------------------------------

TEST_CASE("pointwise reranks by oracle grade", "[rerank]") {
    auto oracle = oracle_for(2, {{"d1", 1}, {"d2", 3}});
    Ranking out = rerank_pointwise(*oracle, kQuery, make_ranking("q1", 2), texts_for(2),
                                   config(Strategy::pointwise));
    CHECK(ids(out) == std::vector<std::string>{"d2", "d1"});
    CHECK_NOTHROW(validate_ranking(out));
}

TEST_CASE("pointwise keeps the original order on equal grades", "[rerank]") {
    auto oracle = oracle_for(4, {{"d1", 2}, {"d2", 2}, {"d3", 2}, {"d4", 2}});
    Ranking out = rerank_pointwise(*oracle, kQuery, make_ranking("q1", 4), texts_for(4),
                                   config(Strategy::pointwise));
    CHECK(ids(out) == std::vector<std::string>{"d1", "d2", "d3", "d4"});
}

TEST_CASE("pointwise respects rerank_depth and leaves the tail unmoved", "[rerank]") {
    CountingBackend backend("1");
    Ranking input = make_ranking("q1", 30);
    RerankStats stats;
    Ranking out = rerank_pointwise(backend, kQuery, input, texts_for(30),
                                   config(Strategy::pointwise, 10), &stats);
    CHECK(backend.calls == 10);
    CHECK(stats.calls == 10);
    for (int i = 10; i < 30; ++i) CHECK(out.entries[i].doc_id == input.entries[i].doc_id);
    CHECK_NOTHROW(validate_ranking(out));
}

TEST_CASE("pointwise scores unparseable responses as grade 0", "[rerank]") {
    CountingBackend backend("no grade at all");
    RerankStats stats;
    Ranking out = rerank_pointwise(backend, kQuery, make_ranking("q1", 3), texts_for(3),
                                   config(Strategy::pointwise), &stats);
    CHECK(stats.unparseable_responses == 3);
    CHECK(ids(out) == std::vector<std::string>{"d1", "d2", "d3"});
}

TEST_CASE("pointwise fails fast when head texts are missing", "[rerank]") {
    CountingBackend backend("1");
    auto texts = texts_for(3);
    texts.erase("d2");
    CHECK_THROWS_AS(rerank_pointwise(backend, kQuery, make_ranking("q1", 3), texts,
                                     config(Strategy::pointwise)),
                    ConfigError);
    CHECK(backend.calls == 0);
}

// --- pairwise ----------------------------------------------------------------

TEST_CASE("pairwise all-pairs matches the enumerated oracle outcome", "[rerank]") {
    // grades d1:0 d2:2 d3:1 -> wins d1:0 d2:4 d3:2 -> order d2 d3 d1
    auto oracle = oracle_for(3, {{"d1", 0}, {"d2", 2}, {"d3", 1}});
    RerankStats stats;
    Ranking out = rerank_pairwise_allpairs(*oracle, kQuery, make_ranking("q1", 3), texts_for(3),
                                           config(Strategy::pairwise), &stats);
    CHECK(ids(out) == std::vector<std::string>{"d2", "d3", "d1"});
    CHECK(stats.calls == 6);
}

TEST_CASE("pairwise m=2 issues exactly 2 calls", "[rerank]") {
    CountingBackend backend("A");
    rerank_pairwise_allpairs(backend, kQuery, make_ranking("q1", 2), texts_for(2),
                             config(Strategy::pairwise));
    CHECK(backend.calls == 2);
}

TEST_CASE("pairwise equal grades preserve the original order", "[rerank]") {
    auto oracle = oracle_for(3, {{"d1", 1}, {"d2", 1}, {"d3", 1}});
    Ranking out = rerank_pairwise_allpairs(*oracle, kQuery, make_ranking("q1", 3), texts_for(3),
                                           config(Strategy::pairwise));
    CHECK(ids(out) == std::vector<std::string>{"d1", "d2", "d3"});
}

TEST_CASE("pairwise head below 2 is the identity", "[rerank]") {
    CountingBackend backend("A");
    Ranking input = make_ranking("q1", 1);
    Ranking out = rerank_pairwise_allpairs(backend, kQuery, input, texts_for(1),
                                           config(Strategy::pairwise));
    CHECK(backend.calls == 0);
    CHECK(ids(out) == ids(input));
}

TEST_CASE("pairwise unparseable verdicts count as wins for A", "[rerank]") {
    CountingBackend backend("???");
    RerankStats stats;
    Ranking out = rerank_pairwise_allpairs(backend, kQuery, make_ranking("q1", 3), texts_for(3),
                                           config(Strategy::pairwise), &stats);
    CHECK(stats.unparseable_responses == 6);
    // every doc wins once per pairing -> original order by tie-break
    CHECK(ids(out) == std::vector<std::string>{"d1", "d2", "d3"});
}

// --- listwise ----------------------------------------------------------------

TEST_CASE("sliding_window_starts arithmetic", "[rerank]") {
    CHECK(sliding_window_starts(3, 20, 10) == std::vector<std::size_t>{0});
    CHECK(sliding_window_starts(4, 2, 1) == std::vector<std::size_t>{2, 1, 0});
    CHECK(sliding_window_starts(30, 20, 10) == std::vector<std::size_t>{10, 0});
    CHECK(sliding_window_starts(25, 20, 10) == std::vector<std::size_t>{5, 0});
    CHECK(sliding_window_starts(20, 20, 10) == std::vector<std::size_t>{0});
}

TEST_CASE("listwise single window sorts by oracle grade", "[rerank]") {
    auto oracle = oracle_for(3, {{"d1", 1}, {"d2", 3}, {"d3", 2}});
    RerankStats stats;
    Ranking out = rerank_listwise_sliding(*oracle, kQuery, make_ranking("q1", 3), texts_for(3),
                                          config(Strategy::listwise, 100, 20, 10), &stats);
    CHECK(ids(out) == std::vector<std::string>{"d2", "d3", "d1"});
    CHECK(stats.calls == 1);
}

TEST_CASE("listwise back-to-front pass follows the window simulation", "[rerank]") {
    // h=4, w=2, s=1, grades d1:0 d2:1 d3:2 d4:3.
    // window(2..4): [d1,d2,d4,d3]; window(1..3): [d1,d4,d2,d3];
    // window(0..2): [d4,d1,d2,d3]
    auto oracle = oracle_for(4, {{"d1", 0}, {"d2", 1}, {"d3", 2}, {"d4", 3}});
    RerankStats stats;
    Ranking out = rerank_listwise_sliding(*oracle, kQuery, make_ranking("q1", 4), texts_for(4),
                                          config(Strategy::listwise, 100, 2, 1), &stats);
    CHECK(ids(out) == std::vector<std::string>{"d4", "d1", "d2", "d3"});
    CHECK(stats.calls == 3);
}

TEST_CASE("listwise with w >= head sorts exactly by grade", "[rerank][property]") {
    std::mt19937 rng(57);
    std::uniform_int_distribution<int> n_docs(2, 20);
    std::uniform_int_distribution<int> grade(0, 3);
    for (int trial = 0; trial < 30; ++trial) {
        int n = n_docs(rng);
        std::map<std::string, int> grades;
        for (int i = 1; i <= n; ++i) grades["d" + std::to_string(i)] = grade(rng);
        auto oracle = oracle_for(n, grades);
        Ranking out = rerank_listwise_sliding(*oracle, kQuery, make_ranking("q1", n), texts_for(n),
                                              config(Strategy::listwise, 100, 100, 10));
        for (std::size_t i = 1; i < out.entries.size(); ++i) {
            int prev = grades[out.entries[i - 1].doc_id];
            int cur = grades[out.entries[i].doc_id];
            CHECK(prev >= cur);
        }
    }
}

TEST_CASE("listwise leaves the window unchanged on unparseable output", "[rerank]") {
    CountingBackend backend("cannot rank these");
    RerankStats stats;
    Ranking input = make_ranking("q1", 5);
    Ranking out = rerank_listwise_sliding(backend, kQuery, input, texts_for(5),
                                          config(Strategy::listwise, 100, 20, 10), &stats);
    CHECK(stats.unparseable_responses == 1);
    CHECK(ids(out) == ids(input));
}

TEST_CASE("listwise identity reply keeps order across many windows", "[rerank]") {
    CountingBackend backend("1");  // repairs to the identity permutation
    Ranking input = make_ranking("q1", 12);
    Ranking out = rerank_listwise_sliding(backend, kQuery, input, texts_for(12),
                                          config(Strategy::listwise, 100, 4, 2));
    CHECK(ids(out) == ids(input));
    CHECK(backend.calls == static_cast<int>(sliding_window_starts(12, 4, 2).size()));
}

TEST_CASE("listwise head below 2 makes no calls", "[rerank]") {
    CountingBackend backend("1");
    Ranking out = rerank_listwise_sliding(backend, kQuery, make_ranking("q1", 1), texts_for(1),
                                          config(Strategy::listwise));
    CHECK(backend.calls == 0);
    CHECK(out.entries.size() == 1);
}

// --- cross-strategy contracts --------------------------------------------------

TEST_CASE("call counts match the contract formulas", "[rerank][contract]") {
    for (int m : {2, 5, 20}) {
        CountingBackend pointwise_backend("1");
        rerank_pointwise(pointwise_backend, kQuery, make_ranking("q1", m), texts_for(m),
                         config(Strategy::pointwise, 100));
        CHECK(pointwise_backend.calls == m);

        CountingBackend pairwise_backend("A");
        rerank_pairwise_allpairs(pairwise_backend, kQuery, make_ranking("q1", m), texts_for(m),
                                 config(Strategy::pairwise, 100));
        CHECK(pairwise_backend.calls == m * (m - 1));

        for (auto [w, s] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 1}, {20, 10}}) {
            CountingBackend listwise_backend("1");
            rerank_listwise_sliding(listwise_backend, kQuery, make_ranking("q1", m), texts_for(m),
                                    config(Strategy::listwise, 100, w, s));
            std::size_t h = static_cast<std::size_t>(m);
            std::size_t expected = h <= w ? 1 : (h - w + s - 1) / s + 1;
            CHECK(listwise_backend.calls == static_cast<int>(expected));
        }
    }
}

TEST_CASE("rerankers permute the input and keep determinism", "[rerank][property]") {
    std::mt19937 rng(73);
    std::uniform_int_distribution<int> n_docs(1, 25);
    std::uniform_int_distribution<int> grade(0, 3);
    std::uniform_int_distribution<int> depth(1, 30);
    for (Strategy strategy : {Strategy::pointwise, Strategy::pairwise, Strategy::listwise}) {
        for (int trial = 0; trial < 10; ++trial) {
            int n = n_docs(rng);
            std::map<std::string, int> grades;
            for (int i = 1; i <= n; ++i) grades["d" + std::to_string(i)] = grade(rng);
            auto oracle = oracle_for(n, grades);
            RerankerConfig cfg = config(strategy, static_cast<std::size_t>(depth(rng)), 8, 4);
            Ranking input = make_ranking("q1", n);

            Ranking out = rerank(*oracle, kQuery, input, texts_for(n), cfg);
            CHECK_NOTHROW(validate_ranking(out));
            auto sorted_in = ids(input), sorted_out = ids(out);
            std::sort(sorted_in.begin(), sorted_in.end());
            std::sort(sorted_out.begin(), sorted_out.end());
            CHECK(sorted_in == sorted_out);

            // tail beyond depth never moves
            for (std::size_t i = std::min(cfg.rerank_depth, input.entries.size());
                 i < input.entries.size(); ++i)
                CHECK(out.entries[i].doc_id == input.entries[i].doc_id);

            Ranking again = rerank(*oracle, kQuery, input, texts_for(n), cfg);
            CHECK(ids(again) == ids(out));
        }
    }
}

TEST_CASE("strategies agree with w >= head", "[rerank][contract]") {
    std::map<std::string, int> grades = {{"d1", 1}, {"d2", 3}, {"d3", 0}, {"d4", 3}, {"d5", 2}};
    auto oracle = oracle_for(5, grades);
    Ranking input = make_ranking("q1", 5);
    auto texts = texts_for(5);

    Ranking pointwise = rerank_pointwise(*oracle, kQuery, input, texts,
                                         config(Strategy::pointwise));
    Ranking pairwise = rerank_pairwise_allpairs(*oracle, kQuery, input, texts,
                                                config(Strategy::pairwise));
    Ranking listwise = rerank_listwise_sliding(*oracle, kQuery, input, texts,
                                               config(Strategy::listwise, 100, 20, 10));
    CHECK(ids(pointwise) == std::vector<std::string>{"d2", "d4", "d5", "d1", "d3"});
    CHECK(ids(pairwise) == ids(pointwise));
    CHECK(ids(listwise) == ids(pointwise));
}

TEST_CASE("backend failures abort with query context", "[rerank]") {
    struct FailingBackend : Backend {
        ChatResponse complete(const ChatRequest&) override {
            throw BackendError("boom", 500);
        }
    } backend;
    try {
        rerank_listwise_sliding(backend, kQuery, make_ranking("q1", 4), texts_for(4),
                                config(Strategy::listwise));
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("q1"));
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("window start"));
        CHECK(e.http_status == 500);
    }
}

TEST_CASE("metadata records the run hyperparameters", "[rerank]") {
    RerankerConfig cfg = config(Strategy::listwise, 50, 20, 10);
    cfg.model = "test-model";
    RerankStats stats{7, 1};
    auto j = metadata_record("q9", cfg, stats);
    CHECK(j["query_id"] == "q9");
    CHECK(j["strategy"] == "listwise");
    CHECK(j["model"] == "test-model");
    CHECK(j["window"] == 20);
    CHECK(j["stride"] == 10);
    CHECK(j["depth"] == 50);
    CHECK(j["prompt_version"] == "genrank-v1");
    CHECK(j["calls"] == 7);
    CHECK(j["unparseable_responses"] == 1);
}
