#pragma once

// Domain value types shared by every module: queries, documents, scored
// rankings and relevance judgments. All types are immutable values after
// construction; every operation here is pure.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genrank/errors.hpp"

namespace genrank {

struct Query {
    std::string id;    // non-empty, no whitespace
    std::string text;  // non-empty after trimming
};

struct Document {
    std::string id;  // non-empty, no whitespace
    std::string text;
    std::optional<std::string> title;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
    int rank = 0;  // 1-based
};

// Ordered result list for one query: scores non-increasing, ranks 1..n
// consecutive, doc ids unique.
struct Ranking {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

inline bool contains_whitespace(const std::string& s) {
    return std::any_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

inline void validate_query(const Query& q) {
    if (q.id.empty() || contains_whitespace(q.id))
        throw ConfigError("query id must be non-empty without whitespace: '" + q.id + "'");
    auto first = q.text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        throw ConfigError("query '" + q.id + "' has empty text");
}

inline void validate_doc_id(const std::string& id) {
    if (id.empty() || contains_whitespace(id))
        throw ConfigError("doc id must be non-empty without whitespace: '" + id + "'");
}

// Asserts all Ranking invariants; run by tests on the output of every
// ranking-producing operation.
inline void validate_ranking(const Ranking& r) {
    std::vector<std::string> seen;
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        const ScoredDoc& e = r.entries[i];
        if (!std::isfinite(e.score))
            throw ConfigError("ranking " + r.query_id + ": non-finite score for " + e.doc_id);
        if (e.rank != static_cast<int>(i) + 1)
            throw ConfigError("ranking " + r.query_id + ": rank " + std::to_string(e.rank) +
                              " at position " + std::to_string(i + 1));
        if (i > 0 && r.entries[i - 1].score < e.score)
            throw ConfigError("ranking " + r.query_id + ": scores increase at rank " +
                              std::to_string(i + 1));
        seen.push_back(e.doc_id);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw ConfigError("ranking " + r.query_id + ": duplicate doc id");
}

// Graded relevance judgments keyed by (query id, doc id). Unjudged pairs
// read as grade 0; that is distinct from the query being absent entirely.
struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;  // qid -> doc -> grade

    void set(const std::string& qid, const std::string& doc_id, int grade) {
        if (grade < 0) throw ConfigError("negative grade for (" + qid + ", " + doc_id + ")");
        judgments[qid][doc_id] = grade;
    }

    bool has_query(const std::string& qid) const { return judgments.count(qid) > 0; }

    int grade(const std::string& qid, const std::string& doc_id) const {
        auto q = judgments.find(qid);
        if (q == judgments.end()) return 0;
        auto d = q->second.find(doc_id);
        return d == q->second.end() ? 0 : d->second;
    }

    // Judged (doc, grade) pairs for one query; empty map if query absent.
    const std::map<std::string, int>& judged(const std::string& qid) const {
        static const std::map<std::string, int> empty;
        auto q = judgments.find(qid);
        return q == judgments.end() ? empty : q->second;
    }
};

// Sorts score-descending with ties broken by doc_id ascending, then
// assigns ranks 1..n.
inline Ranking ranking_from_scores(const std::string& query_id,
                                   const std::map<std::string, double>& scores) {
    Ranking r;
    r.query_id = query_id;
    r.entries.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) {
        if (!std::isfinite(score))
            throw ConfigError("non-finite score for doc '" + doc_id + "'");
        r.entries.push_back(ScoredDoc{doc_id, score, 0});
    }
    std::sort(r.entries.begin(), r.entries.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    for (std::size_t i = 0; i < r.entries.size(); ++i) r.entries[i].rank = static_cast<int>(i) + 1;
    return r;
}

inline Ranking top_k(const Ranking& ranking, std::size_t k) {
    if (k == 0) throw ConfigError("top_k requires k >= 1");
    Ranking r;
    r.query_id = ranking.query_id;
    std::size_t n = std::min(k, ranking.entries.size());
    r.entries.assign(ranking.entries.begin(), ranking.entries.begin() + static_cast<long>(n));
    return r;
}

}  // namespace genrank
