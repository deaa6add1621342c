#pragma once

// Deterministic test backend: recognizes the three prompt shapes built by
// prompts.hpp and answers from ground-truth grades, which makes desk-scale
// acceptance runs possible without any model. Unrecognized prompts are an
// error so template drift is caught instead of silently mis-answered.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "genrank/core.hpp"
#include "genrank/index.hpp"
#include "genrank/llm_client.hpp"
#include "genrank/prompts.hpp"

namespace genrank {

class OracleBackend : public Backend {
public:
    explicit OracleBackend(Qrels qrels = {}, std::map<std::string, int> grade_lookup = {})
        : qrels_(std::move(qrels)), grade_lookup_(std::move(grade_lookup)) {}

    // The oracle resolves passages back to doc ids by their (sanitized)
    // text, so every doc and query that can appear in a prompt must be
    // registered.
    void register_doc(const std::string& id, const std::string& text) {
        doc_by_text_[detail::sanitize_for_prompt(text)] = id;
    }
    void register_query(const Query& query) {
        query_by_text_[detail::sanitize_for_prompt(query.text)] = query.id;
    }
    void register_corpus(const Corpus& corpus) {
        for (const Document& d : corpus.documents) register_doc(d.id, d.text);
    }
    void register_index(const InvertedIndex& index) {
        for (const auto& [id, doc] : index.doc_store) register_doc(id, doc.text);
    }

    ChatResponse complete(const ChatRequest& request) override {
        validate_request(request);
        const std::string& user = request.messages.back().content;
        auto lines = split_lines(user);

        std::string reply;
        if (has_prefixed_line(lines, "Passage A: "))
            reply = answer_pairwise(lines);
        else if (has_prefixed_line(lines, "[1] "))
            reply = answer_listwise(lines);
        else if (has_prefixed_line(lines, "Document: "))
            reply = answer_pointwise(lines);
        else
            throw Error("oracle: unrecognized prompt shape (template drift?)");

        ChatResponse response;
        response.content = reply;
        response.prompt_tokens = static_cast<long>(estimate_tokens(user));
        response.completion_tokens = static_cast<long>(estimate_tokens(reply));
        return response;
    }

private:
    static std::vector<std::string> split_lines(const std::string& text) {
        std::vector<std::string> lines;
        std::string cur;
        for (char c : text) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        lines.push_back(cur);
        return lines;
    }

    static bool starts_with(const std::string& s, const std::string& prefix) {
        return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
    }

    static bool has_prefixed_line(const std::vector<std::string>& lines, const std::string& p) {
        for (const auto& l : lines)
            if (starts_with(l, p)) return true;
        return false;
    }

    static std::string find_after(const std::vector<std::string>& lines, const std::string& p) {
        for (const auto& l : lines)
            if (starts_with(l, p)) return l.substr(p.size());
        throw Error("oracle: prompt is missing a '" + p + "' line");
    }

    std::string resolve_doc(const std::string& passage_text) const {
        auto it = doc_by_text_.find(passage_text);
        if (it != doc_by_text_.end()) return it->second;
        // Truncated passages end with an ellipsis; match by unique prefix.
        static const std::string ellipsis = "…";
        if (passage_text.size() > ellipsis.size() &&
            passage_text.compare(passage_text.size() - ellipsis.size(), ellipsis.size(),
                                 ellipsis) == 0) {
            std::string prefix = passage_text.substr(0, passage_text.size() - ellipsis.size());
            const std::string* match = nullptr;
            for (const auto& [text, id] : doc_by_text_) {
                if (starts_with(text, prefix)) {
                    if (match != nullptr) throw Error("oracle: truncated passage is ambiguous");
                    match = &id;
                }
            }
            if (match != nullptr) return *match;
        }
        throw Error("oracle: passage text not registered: '" + passage_text + "'");
    }

    int grade_of(const std::string& query_text, const std::string& passage_text) const {
        std::string doc_id = resolve_doc(passage_text);
        auto q = query_by_text_.find(query_text);
        if (q != query_by_text_.end() && qrels_.has_query(q->second))
            return qrels_.grade(q->second, doc_id);
        auto g = grade_lookup_.find(doc_id);
        return g == grade_lookup_.end() ? 0 : g->second;
    }

    std::string answer_pointwise(const std::vector<std::string>& lines) const {
        int grade = grade_of(find_after(lines, "Query: "), find_after(lines, "Document: "));
        return std::to_string(grade);
    }

    // Higher grade wins; tie goes to A.
    std::string answer_pairwise(const std::vector<std::string>& lines) const {
        std::string query = find_after(lines, "Query: ");
        int a = grade_of(query, find_after(lines, "Passage A: "));
        int b = grade_of(query, find_after(lines, "Passage B: "));
        return a >= b ? "A" : "B";
    }

    // Identifiers sorted by grade descending, ties by window position
    // ascending, formatted `[i] > [j] > ...`.
    std::string answer_listwise(const std::vector<std::string>& lines) const {
        std::string query = find_after(lines, "Query: ");
        std::vector<int> grades;
        for (std::size_t i = 0;; ++i) {
            std::string marker = "[" + std::to_string(i + 1) + "] ";
            bool found = false;
            for (const auto& l : lines) {
                if (starts_with(l, marker)) {
                    grades.push_back(grade_of(query, l.substr(marker.size())));
                    found = true;
                    break;
                }
            }
            if (!found) break;
        }
        if (grades.size() < 2) throw Error("oracle: listwise prompt has fewer than 2 passages");

        std::vector<std::size_t> order(grades.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return grades[x] > grades[y]; });

        std::string out;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i > 0) out += " > ";
            out += "[" + std::to_string(order[i] + 1) + "]";
        }
        return out;
    }

    Qrels qrels_;
    std::map<std::string, int> grade_lookup_;
    std::map<std::string, std::string> doc_by_text_;
    std::map<std::string, std::string> query_by_text_;
};

inline std::shared_ptr<OracleBackend> oracle_backend(Qrels qrels = {},
                                                     std::map<std::string, int> grade_lookup = {}) {
    return std::make_shared<OracleBackend>(std::move(qrels), std::move(grade_lookup));
}

}  // namespace genrank
