#pragma once

// Composable stage abstraction: a pipeline is an ordered stage list whose
// first stage is a source (retriever or run-file loader). Texts flow as an
// attached side-map populated by a get_text stage; a reranker without one
// is a configuration error caught before any backend call.

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "genrank/core.hpp"
#include "genrank/errors.hpp"
#include "genrank/index.hpp"
#include "genrank/rerank.hpp"

namespace genrank {

struct StageData {
    Ranking ranking;
    std::optional<std::map<std::string, std::string>> texts;
};

struct Stage {
    std::string name;
    bool is_source = false;       // ignores its input ranking
    bool provides_texts = false;  // attaches the text side-map
    bool requires_texts = false;  // must run after a provides_texts stage
    std::function<StageData(const Query&, StageData)> apply;
};

struct Pipeline {
    std::vector<Stage> stages;
};

inline Pipeline compose(Stage a, Stage b) {
    Pipeline p;
    p.stages.push_back(std::move(a));
    p.stages.push_back(std::move(b));
    return p;
}

inline Pipeline compose(Pipeline p, Stage b) {
    p.stages.push_back(std::move(b));
    return p;
}

inline Pipeline compose(Stage a, Pipeline p) {
    Pipeline out;
    out.stages.push_back(std::move(a));
    for (auto& s : p.stages) out.stages.push_back(std::move(s));
    return out;
}

inline Pipeline compose(Pipeline a, Pipeline b) {
    for (auto& s : b.stages) a.stages.push_back(std::move(s));
    return a;
}

inline Pipeline operator>>(Stage a, Stage b) { return compose(std::move(a), std::move(b)); }
inline Pipeline operator>>(Pipeline a, Stage b) { return compose(std::move(a), std::move(b)); }
inline Pipeline operator>>(Stage a, Pipeline b) { return compose(std::move(a), std::move(b)); }
inline Pipeline operator>>(Pipeline a, Pipeline b) { return compose(std::move(a), std::move(b)); }

// Static checks: non-empty, source first, and every texts-consuming stage
// is preceded by a texts-providing one. Runs before any stage executes.
inline void validate_pipeline(const Pipeline& p) {
    if (p.stages.empty()) throw ConfigError("pipeline has no stages");
    if (!p.stages.front().is_source)
        throw ConfigError("first pipeline stage must be a source, got '" + p.stages.front().name +
                          "'");
    bool texts_available = false;
    for (const Stage& s : p.stages) {
        if (s.requires_texts && !texts_available)
            throw ConfigError("stage '" + s.name + "' needs texts but no get_text stage precedes it");
        if (s.provides_texts) texts_available = true;
    }
}

// Applies the stages in order; any stage error is rethrown with the stage
// name attached, and the final ranking is validated. Non-source stages may
// not invent doc ids.
inline Ranking run_pipeline(const Pipeline& p, const Query& query) {
    validate_pipeline(p);
    StageData data;
    data.ranking.query_id = query.id;
    for (const Stage& stage : p.stages) {
        std::vector<std::string> input_ids;
        if (!stage.is_source)
            for (const ScoredDoc& e : data.ranking.entries) input_ids.push_back(e.doc_id);
        try {
            data = stage.apply(query, std::move(data));
        } catch (const BackendError& e) {
            throw BackendError("stage '" + stage.name + "': " + e.what(), e.http_status);
        } catch (const ConfigError& e) {
            throw ConfigError("stage '" + stage.name + "': " + e.what());
        } catch (const std::exception& e) {
            throw Error("stage '" + stage.name + "': " + e.what());
        }
        if (!stage.is_source) {
            std::sort(input_ids.begin(), input_ids.end());
            for (const ScoredDoc& e : data.ranking.entries)
                if (!std::binary_search(input_ids.begin(), input_ids.end(), e.doc_id))
                    throw Error("stage '" + stage.name + "' invented doc id '" + e.doc_id + "'");
        }
    }
    validate_ranking(data.ranking);
    return data.ranking;
}

// --- stock stages ------------------------------------------------------------

inline Stage retriever_stage(std::shared_ptr<const InvertedIndex> index, BM25Params params,
                             std::size_t k) {
    Stage s;
    s.name = "retrieve";
    s.is_source = true;
    s.apply = [index, params, k](const Query& q, StageData) {
        StageData out;
        out.ranking = retrieve(*index, params, q, k);
        return out;
    };
    return s;
}

// Source stage serving rankings from an already-parsed run; queries absent
// from the run get an empty ranking.
inline Stage run_source_stage(std::vector<Ranking> rankings) {
    auto by_query = std::make_shared<std::map<std::string, Ranking>>();
    for (Ranking& r : rankings) (*by_query)[r.query_id] = std::move(r);
    Stage s;
    s.name = "load_run";
    s.is_source = true;
    s.apply = [by_query](const Query& q, StageData) {
        StageData out;
        auto it = by_query->find(q.id);
        if (it != by_query->end()) {
            out.ranking = it->second;
        } else {
            out.ranking.query_id = q.id;
        }
        return out;
    };
    return s;
}

inline Stage get_text_stage(std::shared_ptr<const InvertedIndex> index) {
    Stage s;
    s.name = "get_text";
    s.provides_texts = true;
    s.apply = [index](const Query&, StageData data) {
        std::map<std::string, std::string> texts;
        for (auto& [doc_id, text] : get_text(*index, data.ranking)) texts[doc_id] = std::move(text);
        data.texts = std::move(texts);
        return data;
    };
    return s;
}

inline Stage cut_stage(std::size_t k) {
    Stage s;
    s.name = "cut";
    s.apply = [k](const Query&, StageData data) {
        data.ranking = top_k(data.ranking, k);
        return data;
    };
    return s;
}

inline Stage cut(std::size_t k) { return cut_stage(k); }

inline Stage identity_stage() {
    Stage s;
    s.name = "identity";
    s.apply = [](const Query&, StageData data) { return data; };
    return s;
}

// Thread-safe per-query stats collector for parallel batch runs.
class StatsSink {
public:
    void put(const std::string& query_id, const RerankStats& stats) {
        std::lock_guard<std::mutex> lock(mutex_);
        by_query_[query_id] = stats;
    }
    std::map<std::string, RerankStats> snapshot() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return by_query_;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, RerankStats> by_query_;
};

inline Stage reranker_stage(std::shared_ptr<Backend> backend, RerankerConfig cfg,
                            std::shared_ptr<StatsSink> stats = nullptr) {
    validate_reranker_config(cfg);
    Stage s;
    s.name = "rerank";
    s.requires_texts = true;
    s.apply = [backend, cfg, stats](const Query& q, StageData data) {
        if (!data.texts)
            throw ConfigError("no texts attached (missing get_text stage)");
        RerankStats rs;
        data.ranking = rerank(*backend, q, data.ranking, *data.texts, cfg, &rs);
        if (stats) stats->put(q.id, rs);
        return data;
    };
    return s;
}

// --- batch runner ------------------------------------------------------------

struct BatchOutcome {
    std::vector<Ranking> rankings;  // in input query order, failed queries omitted
    std::vector<std::pair<std::string, std::string>> errors;  // (query_id, message)
};

// Per-query executions are independent; `workers` bounds the parallelism.
// With continue_on_error, failed queries are reported and the rest keep
// their results; otherwise the first error is rethrown.
inline BatchOutcome run_pipeline_batch(const Pipeline& p, const std::vector<Query>& queries,
                                       std::size_t workers = 1, bool continue_on_error = false) {
    validate_pipeline(p);
    if (workers < 1) workers = 1;
    std::vector<std::optional<Ranking>> results(queries.size());
    struct Failure {
        std::size_t index;
        std::string message;
        std::exception_ptr error;
    };
    std::vector<Failure> failures;
    std::mutex failure_mutex;
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= queries.size()) return;
            try {
                results[i] = run_pipeline(p, queries[i]);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failures.push_back(Failure{i, e.what(), std::current_exception()});
            }
        }
    };

    if (workers == 1 || queries.size() <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        std::size_t n = std::min(workers, queries.size());
        pool.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::sort(failures.begin(), failures.end(),
              [](const Failure& a, const Failure& b) { return a.index < b.index; });
    if (!failures.empty() && !continue_on_error) std::rethrow_exception(failures.front().error);

    BatchOutcome out;
    for (auto& r : results)
        if (r) out.rankings.push_back(std::move(*r));
    for (auto& f : failures) out.errors.emplace_back(queries[f.index].id, f.message);
    return out;
}

}  // namespace genrank
