#pragma once

// Corpus ingestion, inverted index construction and Okapi BM25 scoring for
// first-stage retrieval. The index is an immutable value after build;
// concurrent readers need no coordination.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genrank/core.hpp"
#include "genrank/errors.hpp"
#include "genrank/trec.hpp"

namespace genrank {

struct Corpus {
    std::vector<Document> documents;
};

struct BM25Params {
    double k1 = 1.2;  // tf saturation
    double b = 0.75;  // length normalization, in [0,1]
};

struct Posting {
    std::string doc_id;
    int term_frequency = 0;
};

struct InvertedIndex {
    std::map<std::string, std::vector<Posting>> postings;  // term -> postings sorted by doc_id
    std::map<std::string, std::size_t> doc_lengths;        // doc_id -> token count
    std::size_t num_docs = 0;
    double avg_doc_length = 0.0;
    std::map<std::string, Document> doc_store;

    bool has_doc(const std::string& doc_id) const { return doc_lengths.count(doc_id) > 0; }

    std::size_t doc_frequency(const std::string& term) const {
        auto it = postings.find(term);
        return it == postings.end() ? 0 : it->second.size();
    }

    int term_frequency(const std::string& term, const std::string& doc_id) const {
        auto it = postings.find(term);
        if (it == postings.end()) return 0;
        auto p = std::lower_bound(it->second.begin(), it->second.end(), doc_id,
                                  [](const Posting& a, const std::string& d) { return a.doc_id < d; });
        return (p != it->second.end() && p->doc_id == doc_id) ? p->term_frequency : 0;
    }
};

// Lowercases and splits on maximal runs of non-alphanumeric characters.
// ASCII only by design; no stemming, no stopword removal.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
        if (alnum) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// Deterministic regardless of corpus insertion order. Errors on duplicate
// ids, an empty corpus, and an all-empty corpus (avgdl must be > 0).
inline InvertedIndex build_index(const Corpus& corpus) {
    if (corpus.documents.empty()) throw ConfigError("cannot index an empty corpus");
    InvertedIndex index;
    std::size_t total_len = 0;
    for (const Document& doc : corpus.documents) {
        validate_doc_id(doc.id);
        if (index.doc_store.count(doc.id)) throw ConfigError("duplicate doc id '" + doc.id + "'");
        auto tokens = tokenize(doc.text);
        index.doc_lengths[doc.id] = tokens.size();
        total_len += tokens.size();
        std::map<std::string, int> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf)
            index.postings[term].push_back(Posting{doc.id, count});
        index.doc_store[doc.id] = doc;
    }
    index.num_docs = corpus.documents.size();
    index.avg_doc_length = static_cast<double>(total_len) / static_cast<double>(index.num_docs);
    if (index.avg_doc_length <= 0.0)
        throw ConfigError("all documents are empty; avgdl must be > 0");
    for (auto& [term, plist] : index.postings)
        std::sort(plist.begin(), plist.end(),
                  [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
    return index;
}

// Non-negative idf variant: ln((N - df + 0.5) / (df + 0.5) + 1).
inline double bm25_idf(std::size_t num_docs, std::size_t doc_freq) {
    double n = static_cast<double>(num_docs);
    double df = static_cast<double>(doc_freq);
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

// Sum over distinct query terms of idf(t) * tf*(k1+1) / (tf + k1*(1 - b +
// b*dl/avgdl)). Repeated query terms count once; terms absent from the
// document contribute 0.
inline double bm25_score(const InvertedIndex& index, const BM25Params& params,
                         const std::vector<std::string>& query_terms, const std::string& doc_id) {
    auto dl_it = index.doc_lengths.find(doc_id);
    if (dl_it == index.doc_lengths.end())
        throw ConfigError("unknown doc id '" + doc_id + "'");
    double dl = static_cast<double>(dl_it->second);
    double norm = params.k1 * (1.0 - params.b + params.b * dl / index.avg_doc_length);

    std::vector<std::string> distinct(query_terms);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    double score = 0.0;
    for (const std::string& term : distinct) {
        double tf = static_cast<double>(index.term_frequency(term, doc_id));
        if (tf == 0.0) continue;
        double idf = bm25_idf(index.num_docs, index.doc_frequency(term));
        score += idf * tf * (params.k1 + 1.0) / (tf + norm);
    }
    return score;
}

// BM25 top-k over all documents matching at least one query term. Ties
// break by doc_id ascending.
inline Ranking retrieve(const InvertedIndex& index, const BM25Params& params, const Query& query,
                        std::size_t k) {
    if (k == 0) throw ConfigError("retrieve requires k >= 1");
    if (index.num_docs == 0) throw ConfigError("retrieve on an empty index");
    auto terms = tokenize(query.text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::map<std::string, double> scores;
    for (const std::string& term : terms) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        for (const Posting& p : it->second) {
            if (scores.count(p.doc_id)) continue;
            double s = bm25_score(index, params, terms, p.doc_id);
            if (s > 0.0) scores[p.doc_id] = s;
        }
    }
    Ranking full = ranking_from_scores(query.id, scores);
    return top_k(full, k);
}

// Texts in ranking order; errors naming the first missing doc id.
inline std::vector<std::pair<std::string, std::string>> get_text(const InvertedIndex& index,
                                                                 const Ranking& ranking) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(ranking.entries.size());
    for (const ScoredDoc& e : ranking.entries) {
        auto it = index.doc_store.find(e.doc_id);
        if (it == index.doc_store.end())
            throw ConfigError("doc id '" + e.doc_id + "' not in doc store");
        out.emplace_back(e.doc_id, it->second.text);
    }
    return out;
}

// --- persistence -----------------------------------------------------------

inline constexpr const char* index_format_name = "genrank-index";
inline constexpr int index_format_version = 1;

inline std::string serialize_index(const InvertedIndex& index) {
    nlohmann::json j;
    j["format"] = index_format_name;
    j["version"] = index_format_version;
    j["num_docs"] = index.num_docs;
    j["avg_doc_length"] = index.avg_doc_length;
    j["doc_lengths"] = index.doc_lengths;
    nlohmann::json postings = nlohmann::json::object();
    for (const auto& [term, plist] : index.postings) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Posting& p : plist) arr.push_back({p.doc_id, p.term_frequency});
        postings[term] = std::move(arr);
    }
    j["postings"] = std::move(postings);
    nlohmann::json docs = nlohmann::json::object();
    for (const auto& [id, doc] : index.doc_store) {
        nlohmann::json d;
        d["text"] = doc.text;
        if (doc.title) d["title"] = *doc.title;
        docs[id] = std::move(d);
    }
    j["docs"] = std::move(docs);
    return j.dump();
}

inline InvertedIndex deserialize_index(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("index file is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != index_format_name)
        throw ParseError("not a genrank index file");
    if (j.value("version", -1) != index_format_version)
        throw ParseError("unsupported index format version " +
                         std::to_string(j.value("version", -1)));
    InvertedIndex index;
    index.num_docs = j.at("num_docs").get<std::size_t>();
    index.avg_doc_length = j.at("avg_doc_length").get<double>();
    index.doc_lengths = j.at("doc_lengths").get<std::map<std::string, std::size_t>>();
    for (const auto& [term, arr] : j.at("postings").items()) {
        std::vector<Posting> plist;
        for (const auto& p : arr)
            plist.push_back(Posting{p.at(0).get<std::string>(), p.at(1).get<int>()});
        index.postings[term] = std::move(plist);
    }
    for (const auto& [id, d] : j.at("docs").items()) {
        Document doc;
        doc.id = id;
        doc.text = d.at("text").get<std::string>();
        if (d.contains("title")) doc.title = d.at("title").get<std::string>();
        index.doc_store[id] = std::move(doc);
    }
    if (index.num_docs != index.doc_lengths.size())
        throw ParseError("index file is inconsistent: num_docs != doc_lengths size");
    for (const auto& [term, plist] : index.postings) {
        for (std::size_t i = 0; i < plist.size(); ++i) {
            if (!index.doc_lengths.count(plist[i].doc_id))
                throw ParseError("index file is inconsistent: posting for unknown doc '" +
                                 plist[i].doc_id + "'");
            if (i > 0 && !(plist[i - 1].doc_id < plist[i].doc_id))
                throw ParseError("index file is inconsistent: postings for '" + term +
                                 "' not sorted by doc id");
        }
    }
    return index;
}

inline void save_index(const InvertedIndex& index, const std::string& path) {
    write_file(path, serialize_index(index));
}

inline InvertedIndex load_index(const std::string& path) {
    return deserialize_index(read_file(path));
}

// --- corpus ingestion ------------------------------------------------------

// JSONL: one object per line with `id`, `text`, optional `title`.
inline Corpus parse_corpus_jsonl(const std::string& text) {
    Corpus corpus;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("text"))
            throw ParseError("corpus record needs 'id' and 'text' fields", line_no);
        Document doc;
        doc.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        doc.text = j.at("text").get<std::string>();
        if (j.contains("title")) doc.title = j.at("title").get<std::string>();
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

// TSV: one `id<TAB>text` per line.
inline Corpus parse_corpus_tsv(const std::string& text) {
    Corpus corpus;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected id<TAB>text", line_no);
        corpus.documents.push_back(Document{line.substr(0, tab), line.substr(tab + 1), {}});
    }
    return corpus;
}

inline Corpus load_corpus(const std::string& path) {
    std::string content = read_file(path);
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".tsv") return parse_corpus_tsv(content);
    if (ext == ".jsonl" || ext == ".json") return parse_corpus_jsonl(content);
    throw ConfigError("unknown corpus extension '" + ext + "' (expected .jsonl or .tsv)");
}

}  // namespace genrank
