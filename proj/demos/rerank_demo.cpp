// Minimal end-to-end walkthrough on an in-memory corpus: build an index,
// compose retrieve >> get_text >> rerank with the oracle backend standing
// in for a model, and print the before/after rankings.

#include <cstdio>
#include <memory>

#include "genrank/genrank.hpp"

using namespace genrank;

int main() {
    Corpus corpus{{
        Document{"d1", "indian restaurants downtown with great curry", {}},
        Document{"d2", "fast food burger places", {}},
        Document{"d3", "top rated indian restaurants near the river", {}},
        Document{"d4", "indian cooking classes for beginners", {}},
        Document{"d5", "italian restaurants with outdoor seating", {}},
    }};
    auto index = std::make_shared<InvertedIndex>(build_index(corpus));

    Query query{"q1", "indian restaurants"};
    Qrels qrels;
    qrels.set("q1", "d1", 2);
    qrels.set("q1", "d3", 3);
    qrels.set("q1", "d4", 1);

    auto oracle = oracle_backend(qrels);
    oracle->register_index(*index);
    oracle->register_query(query);

    RerankerConfig cfg;
    cfg.strategy = Strategy::listwise;

    Ranking first_stage = retrieve(*index, BM25Params{}, query, 10);
    std::printf("BM25 order:\n");
    for (const auto& e : first_stage.entries)
        std::printf("  %d. %s (%.4f)\n", e.rank, e.doc_id.c_str(), e.score);

    Pipeline pipeline = retriever_stage(index, BM25Params{}, 10) >> get_text_stage(index) >>
                        reranker_stage(oracle, cfg);
    Ranking reranked = run_pipeline(pipeline, query);
    std::printf("after listwise rerank:\n");
    for (const auto& e : reranked.entries)
        std::printf("  %d. %s\n", e.rank, e.doc_id.c_str());

    EvalResult result = mean_ndcg({reranked}, qrels, 10);
    std::printf("nDCG@10 = %.3f\n", result.mean.value_or(0.0));
    return 0;
}
