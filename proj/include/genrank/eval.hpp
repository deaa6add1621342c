#pragma once

// nDCG@k against graded qrels and report tables. Conventions fixed here:
// gain 2^g - 1, discount log2(i+1), ideal DCG over ALL judged docs for the
// query, and queries without any grade > 0 judgment are skipped from the
// mean.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genrank/core.hpp"
#include "genrank/errors.hpp"

namespace genrank {

struct EvalResult {
    std::map<std::string, double> per_query;  // query_id -> nDCG@k in [0,1]
    std::optional<double> mean;               // absent when every query was skipped
    std::size_t k = 10;
    std::vector<std::string> skipped_queries;
};

inline double dcg_at_k(const std::vector<int>& grades_in_rank_order, std::size_t k) {
    if (k == 0) throw ConfigError("dcg_at_k requires k >= 1");
    double dcg = 0.0;
    std::size_t n = std::min(k, grades_in_rank_order.size());
    for (std::size_t i = 0; i < n; ++i) {
        int g = grades_in_rank_order[i];
        if (g < 0) throw ConfigError("negative grade at rank " + std::to_string(i + 1));
        dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg;
}

// nullopt is the skip-marker: the query has no judged doc with grade > 0
// (which includes queries absent from the qrels entirely).
inline std::optional<double> ndcg_at_k(const Ranking& ranking, const Qrels& qrels, std::size_t k) {
    if (k == 0) throw ConfigError("ndcg_at_k requires k >= 1");
    const auto& judged = qrels.judged(ranking.query_id);

    std::vector<int> ideal;
    ideal.reserve(judged.size());
    for (const auto& [doc_id, grade] : judged) ideal.push_back(grade);
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    if (ideal.empty() || ideal.front() <= 0) return std::nullopt;

    std::vector<int> grades;
    grades.reserve(ranking.entries.size());
    for (const ScoredDoc& e : ranking.entries)
        grades.push_back(qrels.grade(ranking.query_id, e.doc_id));

    return dcg_at_k(grades, k) / dcg_at_k(ideal, k);
}

inline EvalResult mean_ndcg(const std::vector<Ranking>& rankings, const Qrels& qrels,
                            std::size_t k) {
    EvalResult result;
    result.k = k;
    std::set<std::string> seen;
    double sum = 0.0;
    for (const Ranking& r : rankings) {
        if (!seen.insert(r.query_id).second)
            throw ConfigError("duplicate query id '" + r.query_id + "' in evaluation");
        auto ndcg = ndcg_at_k(r, qrels, k);
        if (ndcg) {
            result.per_query[r.query_id] = *ndcg;
            sum += *ndcg;
        } else {
            result.skipped_queries.push_back(r.query_id);
        }
    }
    if (!result.per_query.empty()) result.mean = sum / static_cast<double>(result.per_query.size());
    return result;
}

namespace detail {

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace detail

// Aligned plain-text table, nDCG to 3 decimals, "n/a" when every query was
// skipped. All results must share the same k.
inline std::string render_report(const std::map<std::string, EvalResult>& results) {
    std::optional<std::size_t> k;
    for (const auto& [name, r] : results) {
        if (k && r.k != *k) throw ConfigError("mixed k values in report");
        k = r.k;
    }
    std::string metric = "nDCG@" + std::to_string(k.value_or(10));
    std::size_t width = 3;  // "run"
    for (const auto& [name, r] : results) width = std::max(width, name.size());

    std::string out = "run" + std::string(width - 3, ' ') + "  " + metric + "\n";
    for (const auto& [name, r] : results) {
        out += name + std::string(width - name.size(), ' ') + "  ";
        out += r.mean ? detail::format_fixed(*r.mean, 3) : "n/a";
        out += '\n';
    }
    return out;
}

// Machine-readable companion to render_report: `run_name,ndcg@k` rows at
// six decimals.
inline std::string render_csv(const std::map<std::string, EvalResult>& results) {
    std::optional<std::size_t> k;
    for (const auto& [name, r] : results) {
        if (k && r.k != *k) throw ConfigError("mixed k values in report");
        k = r.k;
    }
    std::string out = "run_name,ndcg@" + std::to_string(k.value_or(10)) + "\n";
    for (const auto& [name, r] : results) {
        out += name + ",";
        out += r.mean ? detail::format_fixed(*r.mean, 6) : "n/a";
        out += '\n';
    }
    return out;
}

}  // namespace genrank
