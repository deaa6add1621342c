#pragma once

// TREC-standard text formats: 6-column run files (`qid Q0 docid rank score
// tag`) and 4-column qrels (`qid 0 docid grade`). UTF-8, `\n` on output,
// `\r\n` tolerated on input.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "genrank/core.hpp"
#include "genrank/errors.hpp"

namespace genrank {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string f;
    while (in >> f) fields.push_back(std::move(f));
    return fields;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("unparseable ") + what + " '" + s + "'", line_no);
    }
}

inline long parse_int(const std::string& s, std::size_t line_no, const char* what) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(std::string("unparseable ") + what + " '" + s + "'", line_no);
    return v;
}

}  // namespace detail

// Parses a TREC run. Lines are grouped by qid regardless of interleaving;
// within each query, entries are re-sorted by score descending (stable, so
// ties keep file order) and ranks renumbered 1..n. Rankings come back in
// order of first appearance of their qid.
inline std::vector<Ranking> parse_trec_run(const std::string& text) {
    struct Row {
        std::string doc_id;
        double score;
        std::size_t file_pos;
    };
    std::vector<std::string> qid_order;
    std::map<std::string, std::vector<Row>> rows;
    std::set<std::pair<std::string, std::string>> seen;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::size_t file_pos = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        auto fields = detail::split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 6)
            throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), line_no);
        const std::string& qid = fields[0];
        const std::string& doc_id = fields[2];
        detail::parse_int(fields[3], line_no, "rank");
        double score = detail::parse_double(fields[4], line_no, "score");
        if (!seen.insert({qid, doc_id}).second)
            throw ParseError("duplicate (" + qid + ", " + doc_id + ")", line_no);
        if (rows.find(qid) == rows.end()) qid_order.push_back(qid);
        rows[qid].push_back(Row{doc_id, score, file_pos++});
    }

    std::vector<Ranking> out;
    out.reserve(qid_order.size());
    for (const std::string& qid : qid_order) {
        auto& rs = rows[qid];
        std::stable_sort(rs.begin(), rs.end(),
                         [](const Row& a, const Row& b) { return a.score > b.score; });
        Ranking r;
        r.query_id = qid;
        for (std::size_t i = 0; i < rs.size(); ++i)
            r.entries.push_back(ScoredDoc{rs[i].doc_id, rs[i].score, static_cast<int>(i) + 1});
        out.push_back(std::move(r));
    }
    return out;
}

// Emits `qid Q0 docid rank score tag` lines, scores at 6 decimal places.
// Round-trips through parse_trec_run up to that precision.
inline std::string write_trec_run(const std::vector<Ranking>& rankings, const std::string& tag) {
    if (tag.empty() || contains_whitespace(tag))
        throw ConfigError("run tag must be non-empty without whitespace: '" + tag + "'");
    std::string out;
    char buf[64];
    for (const Ranking& r : rankings) {
        for (const ScoredDoc& e : r.entries) {
            std::snprintf(buf, sizeof(buf), "%.6f", e.score);
            out += r.query_id;
            out += " Q0 ";
            out += e.doc_id;
            out += ' ';
            out += std::to_string(e.rank);
            out += ' ';
            out += buf;
            out += ' ';
            out += tag;
            out += '\n';
        }
    }
    return out;
}

// Later duplicate lines for a (qid, docid) pair override earlier ones.
inline Qrels parse_qrels(const std::string& text) {
    Qrels q;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        auto fields = detail::split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 4)
            throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
        long grade = detail::parse_int(fields[3], line_no, "grade");
        if (grade < 0) throw ParseError("negative grade " + std::to_string(grade), line_no);
        q.judgments[fields[0]][fields[2]] = static_cast<int>(grade);
    }
    return q;
}

// Queries TSV: one `qid<TAB>text` per line.
inline std::vector<Query> parse_queries_tsv(const std::string& text) {
    std::vector<Query> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected qid<TAB>text", line_no);
        Query q{line.substr(0, tab), line.substr(tab + 1)};
        try {
            validate_query(q);
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (!ids.insert(q.id).second) throw ParseError("duplicate query id '" + q.id + "'", line_no);
        out.push_back(std::move(q));
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
    if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace genrank
