#pragma once

// The three prompt families (pointwise, pairwise, listwise) and
// per-document truncation budgets. Builders are pure; wording comes from a
// versioned template set so runs are reproducible.

#include <string>
#include <utility>
#include <vector>

#include "genrank/core.hpp"
#include "genrank/errors.hpp"
#include "genrank/llm_client.hpp"
#include "genrank/trec.hpp"

namespace genrank {

struct TruncationPolicy {
    std::size_t max_doc_tokens = 300;  // estimate_tokens units, >= 1
};

// Messages ready to send plus, for listwise prompts, the doc id at each
// 1-based window position.
struct PromptBundle {
    std::vector<ChatMessage> messages;
    std::vector<std::string> window_doc_ids;  // empty for pointwise/pairwise
};

// Plain-text templates with {placeholder} substitution. The default set is
// embedded below and also shipped under templates/; the version string is
// recorded in run metadata.
struct PromptTemplateSet {
    std::string version;
    std::string pointwise_system;
    std::string pointwise_user;
    std::string pairwise_system;
    std::string pairwise_user;
    std::string listwise_system;
    std::string listwise_user;
};

inline const PromptTemplateSet& default_templates() {
    static const PromptTemplateSet set{
        "genrank-v1",
        "You are a relevance judge. Given a query and a document, judge how relevant "
        "the document is to the query on a graded scale from 0 (not relevant) to 3 "
        "(perfectly relevant).",
        "Query: {query}\n"
        "Document: {document}\n"
        "Output only an integer from 0 to 3.",
        "You are a relevance judge. Given a query and two passages, decide which "
        "passage is more relevant to the query.",
        "Query: {query}\n"
        "Passage A: {passage_a}\n"
        "Passage B: {passage_b}\n"
        "Output only the letter A or B.",
        "You are a search result ranker. Given a query and a numbered list of "
        "passages, rank the passages by how relevant they are to the query.",
        "Query: {query}\n"
        "{passages}\n"
        "Rank the {count} passages above by relevance to the query. Output the "
        "identifiers in descending order of relevance in the exact format "
        "[i] > [j] > ... and nothing else.",
    };
    return set;
}

namespace detail {

inline std::string substitute(std::string text, const std::string& key, const std::string& value) {
    std::string marker = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string::npos) {
        text.replace(pos, marker.size(), value);
        pos += value.size();
    }
    return text;
}

// Prompts keep each passage on one line; internal whitespace runs collapse
// to a single space.
inline std::string sanitize_for_prompt(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_ws = false;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

// Drops a trailing incomplete UTF-8 sequence after a byte-level cut.
inline void trim_partial_utf8(std::string& s) {
    std::size_t cont = 0;
    while (cont < s.size() && (static_cast<unsigned char>(s[s.size() - 1 - cont]) & 0xC0) == 0x80)
        ++cont;
    if (cont == s.size()) {
        s.clear();
        return;
    }
    unsigned char lead = static_cast<unsigned char>(s[s.size() - 1 - cont]);
    std::size_t expect = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
    if (lead >= 0x80 && cont + 1 < expect) s.resize(s.size() - 1 - cont);
}

}  // namespace detail

// Identity when the text fits the budget; otherwise cuts at the last
// whitespace boundary at or before 4*max_doc_tokens characters (hard cut
// when there is none) and appends an ellipsis.
inline std::string truncate_doc(const std::string& text, const TruncationPolicy& policy) {
    if (policy.max_doc_tokens < 1) throw ConfigError("max_doc_tokens must be >= 1");
    if (estimate_tokens(text) <= policy.max_doc_tokens) return text;
    std::size_t limit = 4 * policy.max_doc_tokens;
    std::string cut = text.substr(0, limit);
    auto ws = cut.find_last_of(" \t\n\r");
    if (ws != std::string::npos) {
        std::string at_boundary = cut.substr(0, ws);
        while (!at_boundary.empty() && std::isspace(static_cast<unsigned char>(at_boundary.back())))
            at_boundary.pop_back();
        if (!at_boundary.empty()) cut = std::move(at_boundary);
    }
    detail::trim_partial_utf8(cut);
    return cut + "…";
}

inline PromptBundle build_pointwise_prompt(const Query& query, const Document& doc,
                                           const TruncationPolicy& policy,
                                           const PromptTemplateSet& templates = default_templates()) {
    std::string text = detail::sanitize_for_prompt(truncate_doc(doc.text, policy));
    std::string user = detail::substitute(templates.pointwise_user, "query",
                                          detail::sanitize_for_prompt(query.text));
    user = detail::substitute(user, "document", text);
    PromptBundle bundle;
    bundle.messages = {{Role::system, templates.pointwise_system}, {Role::user, user}};
    return bundle;
}

inline PromptBundle build_pairwise_prompt(const Query& query, const Document& doc_a,
                                          const Document& doc_b, const TruncationPolicy& policy,
                                          const PromptTemplateSet& templates = default_templates()) {
    if (doc_a.id == doc_b.id)
        throw ConfigError("pairwise prompt needs two distinct docs, got '" + doc_a.id + "' twice");
    std::string user = detail::substitute(templates.pairwise_user, "query",
                                          detail::sanitize_for_prompt(query.text));
    user = detail::substitute(user, "passage_a",
                              detail::sanitize_for_prompt(truncate_doc(doc_a.text, policy)));
    user = detail::substitute(user, "passage_b",
                              detail::sanitize_for_prompt(truncate_doc(doc_b.text, policy)));
    PromptBundle bundle;
    bundle.messages = {{Role::system, templates.pairwise_system}, {Role::user, user}};
    return bundle;
}

// Enumerates passages as `[1] text`, `[2] text`, ... with 1-based
// consecutive identifiers. Window size must be in [2, 100].
inline PromptBundle build_listwise_prompt(
    const Query& query, const std::vector<std::pair<std::string, std::string>>& window_docs,
    const TruncationPolicy& policy, const PromptTemplateSet& templates = default_templates()) {
    if (window_docs.size() < 2)
        throw ConfigError("listwise window must hold at least 2 docs, got " +
                          std::to_string(window_docs.size()));
    if (window_docs.size() > 100)
        throw ConfigError("listwise window must hold at most 100 docs, got " +
                          std::to_string(window_docs.size()));
    std::string passages;
    PromptBundle bundle;
    for (std::size_t i = 0; i < window_docs.size(); ++i) {
        if (i > 0) passages += '\n';
        passages += "[" + std::to_string(i + 1) + "] " +
                    detail::sanitize_for_prompt(truncate_doc(window_docs[i].second, policy));
        bundle.window_doc_ids.push_back(window_docs[i].first);
    }
    std::string user = detail::substitute(templates.listwise_user, "query",
                                          detail::sanitize_for_prompt(query.text));
    user = detail::substitute(user, "passages", passages);
    user = detail::substitute(user, "count", std::to_string(window_docs.size()));
    bundle.messages = {{Role::system, templates.listwise_system}, {Role::user, user}};
    return bundle;
}

// Loads a template set from a directory of plain-text files (one trailing
// newline trimmed per file): VERSION, pointwise_system.txt, pointwise_user.txt,
// pairwise_system.txt, pairwise_user.txt, listwise_system.txt, listwise_user.txt.
inline PromptTemplateSet load_templates(const std::string& dir) {
    auto read_one = [&dir](const std::string& name) {
        std::string text = read_file(dir + "/" + name);
        if (!text.empty() && text.back() == '\n') text.pop_back();
        if (!text.empty() && text.back() == '\r') text.pop_back();
        return text;
    };
    PromptTemplateSet set;
    set.version = read_one("VERSION");
    set.pointwise_system = read_one("pointwise_system.txt");
    set.pointwise_user = read_one("pointwise_user.txt");
    set.pairwise_system = read_one("pairwise_system.txt");
    set.pairwise_user = read_one("pairwise_user.txt");
    set.listwise_system = read_one("listwise_system.txt");
    set.listwise_user = read_one("listwise_user.txt");
    if (set.version.empty()) throw ConfigError("template set at '" + dir + "' has empty VERSION");
    return set;
}

}  // namespace genrank
