#pragma once

// Run configuration: a single key/value file with nested [sections], the
// hyperparameter surface for experiments. CLI flags override file values;
// secrets only ever come from the environment.

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "genrank/errors.hpp"
#include "genrank/index.hpp"
#include "genrank/llm_client.hpp"
#include "genrank/rerank.hpp"

namespace genrank {

enum class BackendKind { http, oracle };

inline BackendKind backend_kind_from_name(const std::string& name) {
    if (name == "http") return BackendKind::http;
    if (name == "oracle") return BackendKind::oracle;
    throw ConfigError("unknown backend '" + name + "' (http|oracle)");
}

// One pipeline stage spec from the config: `name` or `name:param`.
struct StageSpec {
    std::string name;
    std::optional<std::size_t> param;
};

struct RunConfig {
    std::string corpus_path;
    std::string index_path;
    std::string queries_path;
    std::string qrels_path;  // optional
    std::string output_run_path = "run.txt";
    std::string run_tag = "genrank";
    std::size_t k_eval = 10;
    std::size_t retrieve_k = 100;
    bool continue_on_error = false;
    BackendKind backend_kind = BackendKind::http;
    BM25Params bm25;
    BackendConfig backend;
    RerankerConfig reranker;
    std::vector<StageSpec> pipeline;  // defaults to retrieve >> get_text >> rerank
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// `key = value` lines, `[section]` headers, `#` comments. Keys are
// returned flattened as `section.key`.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no);
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError("empty section name", line_no);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

inline std::vector<StageSpec> parse_stage_specs(const std::string& text) {
    std::vector<StageSpec> specs;
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        StageSpec spec;
        auto colon = token.find(':');
        if (colon == std::string::npos) {
            spec.name = token;
        } else {
            spec.name = token.substr(0, colon);
            std::string arg = token.substr(colon + 1);
            try {
                spec.param = static_cast<std::size_t>(std::stoul(arg));
            } catch (const std::exception&) {
                throw ConfigError("stage '" + token + "': parameter must be a positive integer");
            }
            if (*spec.param == 0)
                throw ConfigError("stage '" + token + "': parameter must be >= 1");
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

namespace detail {

inline std::size_t to_size(const std::string& value, const std::string& key) {
    try {
        long v = std::stol(value);
        if (v < 1) throw std::out_of_range(value);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' must be a positive integer, got '" + value +
                          "'");
    }
}

inline int to_int_nonneg(const std::string& value, const std::string& key) {
    try {
        int v = std::stoi(value);
        if (v < 0) throw std::out_of_range(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' must be a non-negative integer, got '" +
                          value + "'");
    }
}

inline bool to_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "' must be true or false, got '" + value + "'");
}

inline double to_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' must be a number, got '" + value + "'");
    }
}

}  // namespace detail

inline RunConfig config_from_map(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    std::map<std::string, std::string> unused = kv;
    auto take = [&unused](const std::string& key) -> std::optional<std::string> {
        auto it = unused.find(key);
        if (it == unused.end()) return std::nullopt;
        std::string v = it->second;
        unused.erase(it);
        return v;
    };

    if (auto v = take("corpus_path")) cfg.corpus_path = *v;
    if (auto v = take("index_path")) cfg.index_path = *v;
    if (auto v = take("queries_path")) cfg.queries_path = *v;
    if (auto v = take("qrels_path")) cfg.qrels_path = *v;
    if (auto v = take("output_run_path")) cfg.output_run_path = *v;
    if (auto v = take("run_tag")) cfg.run_tag = *v;
    if (cfg.run_tag.empty() || contains_whitespace(cfg.run_tag))
        throw ConfigError("run_tag must be non-empty without whitespace: '" + cfg.run_tag + "'");
    if (auto v = take("k_eval")) cfg.k_eval = detail::to_size(*v, "k_eval");
    if (auto v = take("retrieve_k")) cfg.retrieve_k = detail::to_size(*v, "retrieve_k");
    if (auto v = take("continue_on_error"))
        cfg.continue_on_error = detail::to_bool(*v, "continue_on_error");

    if (auto v = take("bm25.k1")) {
        cfg.bm25.k1 = detail::to_double(*v, "bm25.k1");
        if (cfg.bm25.k1 < 0.0) throw ConfigError("bm25.k1 must be >= 0");
    }
    if (auto v = take("bm25.b")) {
        cfg.bm25.b = detail::to_double(*v, "bm25.b");
        if (cfg.bm25.b < 0.0 || cfg.bm25.b > 1.0) throw ConfigError("bm25.b must be in [0,1]");
    }

    if (auto v = take("backend.kind")) cfg.backend_kind = backend_kind_from_name(*v);
    if (auto v = take("backend.base_url")) cfg.backend.base_url = *v;
    if (auto v = take("backend.api_key_env")) cfg.backend.api_key_env = *v;
    if (auto v = take("backend.timeout_ms"))
        cfg.backend.timeout_ms = static_cast<int>(detail::to_size(*v, "backend.timeout_ms"));
    if (auto v = take("backend.max_retries"))
        cfg.backend.max_retries = detail::to_int_nonneg(*v, "backend.max_retries");
    if (auto v = take("backend.retry_base_ms"))
        cfg.backend.retry_base_ms = static_cast<int>(detail::to_size(*v, "backend.retry_base_ms"));
    if (auto v = take("backend.max_inflight"))
        cfg.backend.max_inflight = static_cast<int>(detail::to_size(*v, "backend.max_inflight"));

    if (auto v = take("reranker.strategy")) cfg.reranker.strategy = strategy_from_name(*v);
    if (auto v = take("reranker.depth"))
        cfg.reranker.rerank_depth = detail::to_size(*v, "reranker.depth");
    if (auto v = take("reranker.window")) cfg.reranker.window = detail::to_size(*v, "reranker.window");
    if (auto v = take("reranker.stride")) cfg.reranker.stride = detail::to_size(*v, "reranker.stride");
    if (auto v = take("reranker.model")) cfg.reranker.model = *v;
    if (auto v = take("reranker.max_grade"))
        cfg.reranker.max_grade = static_cast<int>(detail::to_size(*v, "reranker.max_grade"));
    if (auto v = take("reranker.max_tokens"))
        cfg.reranker.max_tokens = static_cast<int>(detail::to_size(*v, "reranker.max_tokens"));
    if (auto v = take("reranker.max_doc_tokens"))
        cfg.reranker.truncation.max_doc_tokens =
            detail::to_size(*v, "reranker.max_doc_tokens");
    if (auto v = take("reranker.templates_dir")) cfg.reranker.templates = load_templates(*v);

    if (auto v = take("pipeline.stages")) cfg.pipeline = parse_stage_specs(*v);

    if (!unused.empty())
        throw ConfigError("unknown config key '" + unused.begin()->first + "'");
    return cfg;
}

// Input paths named by the config must exist at load time; output paths
// need not.
inline void check_config_paths(const RunConfig& cfg) {
    auto require = [](const std::string& path, const char* what) {
        if (!path.empty() && !std::filesystem::exists(path))
            throw ConfigError(std::string(what) + " does not exist: " + path);
    };
    require(cfg.corpus_path, "corpus_path");
    require(cfg.queries_path, "queries_path");
    require(cfg.qrels_path, "qrels_path");
}

inline RunConfig load_config(const std::string& path) {
    RunConfig cfg = config_from_map(parse_config_text(read_file(path)));
    check_config_paths(cfg);
    return cfg;
}

}  // namespace genrank
