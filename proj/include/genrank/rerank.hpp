#pragma once

// Second-stage generative rerankers: pointwise scoring, pairwise
// all-pairs voting and listwise sliding-window permutation, plus robust
// parsing/repair of model output. Every reranker returns a permutation of
// its input doc ids; the tail beyond rerank_depth is never touched.

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genrank/core.hpp"
#include "genrank/errors.hpp"
#include "genrank/llm_client.hpp"
#include "genrank/prompts.hpp"

namespace genrank {

enum class Strategy { pointwise, pairwise, listwise };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::pointwise: return "pointwise";
        case Strategy::pairwise: return "pairwise";
        default: return "listwise";
    }
}

inline Strategy strategy_from_name(const std::string& name) {
    if (name == "pointwise") return Strategy::pointwise;
    if (name == "pairwise") return Strategy::pairwise;
    if (name == "listwise") return Strategy::listwise;
    throw ConfigError("unknown strategy '" + name + "' (pointwise|pairwise|listwise)");
}

struct RerankerConfig {
    Strategy strategy = Strategy::listwise;
    std::size_t rerank_depth = 100;  // head documents eligible for reordering
    std::size_t window = 20;
    std::size_t stride = 10;
    std::string model = "oracle";
    TruncationPolicy truncation;
    int max_grade = 3;  // pointwise grade scale 0..max_grade
    int max_tokens = 256;
    PromptTemplateSet templates = default_templates();
};

inline void validate_reranker_config(const RerankerConfig& cfg) {
    if (cfg.rerank_depth < 1) throw ConfigError("rerank_depth must be >= 1");
    if (cfg.window < 1) throw ConfigError("window must be >= 1");
    if (cfg.stride < 1) throw ConfigError("stride must be >= 1");
    if (cfg.stride > cfg.window) throw ConfigError("stride must be <= window");
    if (cfg.max_grade < 1) throw ConfigError("max_grade must be >= 1");
}

// Per-query counters surfaced in run metadata.
struct RerankStats {
    std::size_t calls = 0;
    std::size_t unparseable_responses = 0;
};

struct ParsedPermutation {
    std::vector<std::size_t> order;  // 1-based window indices, full permutation
};

namespace detail {

// All non-negative integers in textual order; runs of digits, saturated
// well above any window size.
inline std::vector<std::size_t> extract_integers(const std::string& text) {
    std::vector<std::size_t> out;
    std::size_t cur = 0;
    bool in_number = false;
    for (char c : text) {
        if (c >= '0' && c <= '9') {
            cur = std::min<std::size_t>(cur * 10 + static_cast<std::size_t>(c - '0'), 1000000);
            in_number = true;
        } else if (in_number) {
            out.push_back(cur);
            cur = 0;
            in_number = false;
        }
    }
    if (in_number) out.push_back(cur);
    return out;
}

}  // namespace detail

// Accepts `[2] > [1]`, `2 > 1`, `2,1` and surrounding prose. Repair: drop
// out-of-range indices, drop repeats after the first occurrence, append
// missing indices ascending. Throws UnparseableResponseError only when the
// response contains no integers at all.
inline ParsedPermutation parse_permutation(const std::string& response, std::size_t window_len) {
    if (window_len < 1) throw ConfigError("window_len must be >= 1");
    auto numbers = detail::extract_integers(response);
    if (numbers.empty())
        throw UnparseableResponseError("no integers in response: '" + response + "'");
    ParsedPermutation perm;
    std::vector<bool> used(window_len + 1, false);
    for (std::size_t n : numbers) {
        if (n < 1 || n > window_len || used[n]) continue;
        used[n] = true;
        perm.order.push_back(n);
    }
    for (std::size_t n = 1; n <= window_len; ++n)
        if (!used[n]) perm.order.push_back(n);
    return perm;
}

// First integer in the response, clamped to [0, max_grade].
inline int parse_pointwise_score(const std::string& response, int max_grade) {
    if (max_grade < 1) throw ConfigError("max_grade must be >= 1");
    auto numbers = detail::extract_integers(response);
    if (numbers.empty())
        throw UnparseableResponseError("no integer in response: '" + response + "'");
    return static_cast<int>(std::min<std::size_t>(numbers.front(), static_cast<std::size_t>(max_grade)));
}

namespace detail {

inline std::size_t head_size(const Ranking& ranking, const RerankerConfig& cfg) {
    return std::min(cfg.rerank_depth, ranking.entries.size());
}

// Fail fast before any backend call.
inline void require_head_texts(const Ranking& ranking, std::size_t head,
                               const std::map<std::string, std::string>& texts) {
    for (std::size_t i = 0; i < head; ++i)
        if (texts.find(ranking.entries[i].doc_id) == texts.end())
            throw ConfigError("no text for head doc '" + ranking.entries[i].doc_id +
                              "' (is a get_text stage missing?)");
}

// Head in `order`, then the untouched tail, with synthetic descending
// scores n..1 so Ranking invariants hold.
inline Ranking rebuild(const Ranking& input, std::size_t head,
                       const std::vector<std::size_t>& order) {
    Ranking out;
    out.query_id = input.query_id;
    std::size_t n = input.entries.size();
    out.entries.reserve(n);
    for (std::size_t i = 0; i < head; ++i) out.entries.push_back(input.entries[order[i]]);
    for (std::size_t i = head; i < n; ++i) out.entries.push_back(input.entries[i]);
    for (std::size_t i = 0; i < n; ++i) {
        out.entries[i].score = static_cast<double>(n - i);
        out.entries[i].rank = static_cast<int>(i) + 1;
    }
    return out;
}

inline ChatRequest make_request(const RerankerConfig& cfg, const PromptBundle& bundle) {
    ChatRequest request;
    request.model = cfg.model;
    request.messages = bundle.messages;
    request.temperature = 0.0;
    request.max_tokens = cfg.max_tokens;
    return request;
}

[[noreturn]] inline void rethrow_backend(const BackendError& e, const std::string& context) {
    throw BackendError(context + ": " + e.what(), e.http_status);
}

}  // namespace detail

// One pointwise prompt per head doc; head re-sorted by (grade descending,
// original rank ascending). Unparseable responses score grade 0.
inline Ranking rerank_pointwise(Backend& backend, const Query& query, const Ranking& ranking,
                                const std::map<std::string, std::string>& texts,
                                const RerankerConfig& cfg, RerankStats* stats = nullptr) {
    validate_reranker_config(cfg);
    RerankStats local;
    std::size_t head = detail::head_size(ranking, cfg);
    detail::require_head_texts(ranking, head, texts);

    std::vector<int> grades(head, 0);
    for (std::size_t i = 0; i < head; ++i) {
        const std::string& doc_id = ranking.entries[i].doc_id;
        Document doc{doc_id, texts.at(doc_id), {}};
        auto bundle = build_pointwise_prompt(query, doc, cfg.truncation, cfg.templates);
        ChatResponse response;
        try {
            response = backend.complete(detail::make_request(cfg, bundle));
        } catch (const BackendError& e) {
            detail::rethrow_backend(e, "query '" + query.id + "', doc '" + doc_id + "'");
        }
        ++local.calls;
        try {
            grades[i] = parse_pointwise_score(response.content, cfg.max_grade);
        } catch (const UnparseableResponseError&) {
            ++local.unparseable_responses;
            grades[i] = 0;
        }
    }

    std::vector<std::size_t> order(head);
    for (std::size_t i = 0; i < head; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grades[a] > grades[b]; });
    if (stats != nullptr) *stats = local;
    return detail::rebuild(ranking, head, order);
}

// Both orderings of every unordered head pair (m*(m-1) calls); each verdict
// awards one win to the named doc. An unparseable verdict counts as a win
// for the doc in position A.
inline Ranking rerank_pairwise_allpairs(Backend& backend, const Query& query,
                                        const Ranking& ranking,
                                        const std::map<std::string, std::string>& texts,
                                        const RerankerConfig& cfg, RerankStats* stats = nullptr) {
    validate_reranker_config(cfg);
    RerankStats local;
    std::size_t head = detail::head_size(ranking, cfg);
    if (head < 2) {
        if (stats != nullptr) *stats = local;
        return ranking;
    }
    detail::require_head_texts(ranking, head, texts);

    auto doc_at = [&](std::size_t i) {
        const std::string& id = ranking.entries[i].doc_id;
        return Document{id, texts.at(id), {}};
    };

    std::vector<std::size_t> wins(head, 0);
    auto duel = [&](std::size_t a, std::size_t b) {
        auto bundle = build_pairwise_prompt(query, doc_at(a), doc_at(b), cfg.truncation,
                                            cfg.templates);
        ChatResponse response;
        try {
            response = backend.complete(detail::make_request(cfg, bundle));
        } catch (const BackendError& e) {
            detail::rethrow_backend(e, "query '" + query.id + "', pair ('" +
                                           ranking.entries[a].doc_id + "', '" +
                                           ranking.entries[b].doc_id + "')");
        }
        ++local.calls;
        auto first = response.content.find_first_not_of(" \t\r\n");
        char verdict = first == std::string::npos ? '\0' : response.content[first];
        if (verdict == 'A' || verdict == 'a') {
            ++wins[a];
        } else if (verdict == 'B' || verdict == 'b') {
            ++wins[b];
        } else {
            ++local.unparseable_responses;
            ++wins[a];
        }
    };

    for (std::size_t i = 0; i < head; ++i) {
        for (std::size_t j = i + 1; j < head; ++j) {
            duel(i, j);
            duel(j, i);
        }
    }

    std::vector<std::size_t> order(head);
    for (std::size_t i = 0; i < head; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return wins[a] > wins[b]; });
    if (stats != nullptr) *stats = local;
    return detail::rebuild(ranking, head, order);
}

// Window start positions for one back-to-front pass over a head of size h:
// max(h-w, 0), then decreasing by the stride, final window starting at 0.
inline std::vector<std::size_t> sliding_window_starts(std::size_t head, std::size_t window,
                                                      std::size_t stride) {
    std::vector<std::size_t> starts;
    std::size_t cur = head > window ? head - window : 0;
    starts.push_back(cur);
    while (cur > 0) {
        cur = cur > stride ? cur - stride : 0;
        starts.push_back(cur);
    }
    return starts;
}

// Single back-to-front sliding pass; each window is reordered in place by
// the parsed (and repaired) permutation. An unparseable response leaves
// that window unchanged.
inline Ranking rerank_listwise_sliding(Backend& backend, const Query& query,
                                       const Ranking& ranking,
                                       const std::map<std::string, std::string>& texts,
                                       const RerankerConfig& cfg, RerankStats* stats = nullptr) {
    validate_reranker_config(cfg);
    if (cfg.window < 2) throw ConfigError("listwise reranking needs window >= 2");
    RerankStats local;
    std::size_t head = detail::head_size(ranking, cfg);
    if (head < 2) {
        if (stats != nullptr) *stats = local;
        return ranking;
    }
    detail::require_head_texts(ranking, head, texts);

    std::vector<std::size_t> order(head);
    for (std::size_t i = 0; i < head; ++i) order[i] = i;

    for (std::size_t start : sliding_window_starts(head, cfg.window, cfg.stride)) {
        std::size_t end = std::min(start + cfg.window, head);
        std::vector<std::pair<std::string, std::string>> window_docs;
        window_docs.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            const std::string& id = ranking.entries[order[i]].doc_id;
            window_docs.emplace_back(id, texts.at(id));
        }
        auto bundle = build_listwise_prompt(query, window_docs, cfg.truncation, cfg.templates);
        ChatResponse response;
        try {
            response = backend.complete(detail::make_request(cfg, bundle));
        } catch (const BackendError& e) {
            detail::rethrow_backend(e, "query '" + query.id + "', window start " +
                                           std::to_string(start));
        }
        ++local.calls;
        try {
            auto perm = parse_permutation(response.content, end - start);
            std::vector<std::size_t> reordered(end - start);
            for (std::size_t k = 0; k < perm.order.size(); ++k)
                reordered[k] = order[start + perm.order[k] - 1];
            std::copy(reordered.begin(), reordered.end(), order.begin() + static_cast<long>(start));
        } catch (const UnparseableResponseError&) {
            ++local.unparseable_responses;
        }
    }
    if (stats != nullptr) *stats = local;
    return detail::rebuild(ranking, head, order);
}

inline Ranking rerank(Backend& backend, const Query& query, const Ranking& ranking,
                      const std::map<std::string, std::string>& texts, const RerankerConfig& cfg,
                      RerankStats* stats = nullptr) {
    switch (cfg.strategy) {
        case Strategy::pointwise:
            return rerank_pointwise(backend, query, ranking, texts, cfg, stats);
        case Strategy::pairwise:
            return rerank_pairwise_allpairs(backend, query, ranking, texts, cfg, stats);
        default:
            return rerank_listwise_sliding(backend, query, ranking, texts, cfg, stats);
    }
}

// One JSONL record per query in the run metadata file.
inline nlohmann::json metadata_record(const std::string& query_id, const RerankerConfig& cfg,
                                      const RerankStats& stats) {
    return nlohmann::json{{"query_id", query_id},
                          {"strategy", strategy_name(cfg.strategy)},
                          {"model", cfg.model},
                          {"window", cfg.window},
                          {"stride", cfg.stride},
                          {"depth", cfg.rerank_depth},
                          {"prompt_version", cfg.templates.version},
                          {"calls", stats.calls},
                          {"unparseable_responses", stats.unparseable_responses}};
}

}  // namespace genrank
