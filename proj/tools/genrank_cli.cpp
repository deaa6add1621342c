// genrank command line: index building, BM25 retrieval, LLM reranking,
// nDCG evaluation and full pipeline runs driven by a config file.
//
// Exit codes: 0 success, 1 config/parse error, 2 backend error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genrank/genrank.hpp"

namespace {

using namespace genrank;

struct Overrides {
    std::string config_path;
    std::optional<std::string> strategy;
    std::optional<std::size_t> window;
    std::optional<std::size_t> stride;
    std::optional<std::size_t> depth;
    std::optional<std::string> model;
    std::optional<std::string> base_url;
    std::optional<std::string> backend;
    std::size_t workers = 1;
};

void add_common_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "config file path")->required();
    cmd->add_option("--strategy", o.strategy, "pointwise|pairwise|listwise");
    cmd->add_option("--window", o.window, "listwise window size");
    cmd->add_option("--stride", o.stride, "listwise window stride");
    cmd->add_option("--depth", o.depth, "rerank depth");
    cmd->add_option("--model", o.model, "model name sent to the endpoint");
    cmd->add_option("--base-url", o.base_url, "OpenAI-compatible endpoint base URL");
    cmd->add_option("--backend", o.backend, "http|oracle");
    cmd->add_option("--workers", o.workers, "parallel queries (default 1)");
}

RunConfig resolve_config(const Overrides& o) {
    RunConfig cfg = load_config(o.config_path);
    if (o.strategy) cfg.reranker.strategy = strategy_from_name(*o.strategy);
    if (o.window) cfg.reranker.window = *o.window;
    if (o.stride) cfg.reranker.stride = *o.stride;
    if (o.depth) cfg.reranker.rerank_depth = *o.depth;
    if (o.model) cfg.reranker.model = *o.model;
    if (o.base_url) cfg.backend.base_url = *o.base_url;
    if (o.backend) cfg.backend_kind = backend_kind_from_name(*o.backend);
    return cfg;
}

InvertedIndex open_index(const RunConfig& cfg) {
    if (!cfg.index_path.empty() && std::filesystem::exists(cfg.index_path))
        return load_index(cfg.index_path);
    if (!cfg.corpus_path.empty()) return build_index(load_corpus(cfg.corpus_path));
    throw ConfigError("no index: set index_path (and run `genrank index`) or corpus_path");
}

std::vector<Query> open_queries(const RunConfig& cfg) {
    if (cfg.queries_path.empty()) throw ConfigError("queries_path is not set");
    return parse_queries_tsv(read_file(cfg.queries_path));
}

std::shared_ptr<Backend> make_backend(const RunConfig& cfg, const InvertedIndex& index,
                                      const std::vector<Query>& queries) {
    if (cfg.backend_kind == BackendKind::http) return std::make_shared<HttpBackend>(cfg.backend);
    if (cfg.qrels_path.empty())
        throw ConfigError("the oracle backend needs qrels_path for ground-truth grades");
    auto oracle = oracle_backend(parse_qrels(read_file(cfg.qrels_path)));
    oracle->register_index(index);
    for (const Query& q : queries) oracle->register_query(q);
    return oracle;
}

std::vector<StageSpec> effective_stages(const RunConfig& cfg) {
    if (!cfg.pipeline.empty()) return cfg.pipeline;
    return {StageSpec{"retrieve", cfg.retrieve_k}, StageSpec{"get_text", {}},
            StageSpec{"rerank", {}}};
}

Pipeline build_pipeline(const RunConfig& cfg, std::shared_ptr<const InvertedIndex> index,
                        std::shared_ptr<Backend> backend, std::shared_ptr<StatsSink> stats) {
    Pipeline p;
    for (const StageSpec& spec : effective_stages(cfg)) {
        if (spec.name == "retrieve") {
            p.stages.push_back(retriever_stage(index, cfg.bm25, spec.param.value_or(cfg.retrieve_k)));
        } else if (spec.name == "get_text") {
            p.stages.push_back(get_text_stage(index));
        } else if (spec.name == "rerank") {
            p.stages.push_back(reranker_stage(backend, cfg.reranker, stats));
        } else if (spec.name == "cut") {
            if (!spec.param) throw ConfigError("cut stage needs a parameter, e.g. cut:10");
            p.stages.push_back(cut_stage(*spec.param));
        } else if (spec.name == "identity") {
            p.stages.push_back(identity_stage());
        } else {
            throw ConfigError("unknown pipeline stage '" + spec.name + "'");
        }
    }
    return p;
}

std::size_t estimate_calls_per_query(const RunConfig& cfg, std::size_t candidates) {
    std::size_t m = std::min(cfg.reranker.rerank_depth, candidates);
    switch (cfg.reranker.strategy) {
        case Strategy::pointwise: return m;
        case Strategy::pairwise: return m < 2 ? 0 : m * (m - 1);
        default:
            return m < 2 ? 0
                         : sliding_window_starts(m, cfg.reranker.window, cfg.reranker.stride).size();
    }
}

void write_metadata(const RunConfig& cfg, const StatsSink& stats, const std::string& path) {
    std::string out;
    for (const auto& [query_id, rs] : stats.snapshot())
        out += metadata_record(query_id, cfg.reranker, rs).dump() + "\n";
    write_file(path, out);
}

std::string metadata_path(const RunConfig& cfg) { return cfg.output_run_path + ".meta.jsonl"; }

// --- subcommands -------------------------------------------------------------

int cmd_index(const Overrides& o, bool force) {
    RunConfig cfg = resolve_config(o);
    if (cfg.corpus_path.empty()) throw ConfigError("corpus_path is not set");
    if (cfg.index_path.empty()) throw ConfigError("index_path is not set");
    if (std::filesystem::exists(cfg.index_path) && !force)
        throw ConfigError("index already exists at " + cfg.index_path + " (use --force)");
    InvertedIndex index = build_index(load_corpus(cfg.corpus_path));
    save_index(index, cfg.index_path);
    std::printf("indexed %zu docs, avgdl=%.3f, vocabulary=%zu -> %s\n", index.num_docs,
                index.avg_doc_length, index.postings.size(), cfg.index_path.c_str());
    return 0;
}

int cmd_retrieve(const Overrides& o, std::optional<std::size_t> k) {
    RunConfig cfg = resolve_config(o);
    if (cfg.index_path.empty() || !std::filesystem::exists(cfg.index_path))
        throw ConfigError("index not found at '" + cfg.index_path + "' (run `genrank index`)");
    InvertedIndex index = load_index(cfg.index_path);
    std::vector<Query> queries = open_queries(cfg);
    std::size_t cut = k.value_or(cfg.retrieve_k);
    std::vector<Ranking> rankings;
    rankings.reserve(queries.size());
    for (const Query& q : queries) rankings.push_back(retrieve(index, cfg.bm25, q, cut));
    write_file(cfg.output_run_path, write_trec_run(rankings, cfg.run_tag));
    std::printf("retrieved top-%zu for %zu queries -> %s\n", cut, queries.size(),
                cfg.output_run_path.c_str());
    return 0;
}

int cmd_rerank(const Overrides& o, const std::string& input_run_path) {
    RunConfig cfg = resolve_config(o);
    std::vector<Ranking> input = parse_trec_run(read_file(input_run_path));
    auto index = std::make_shared<InvertedIndex>(open_index(cfg));
    std::vector<Query> all_queries = open_queries(cfg);

    // Queries driving the rerank are the run's, in run order; each needs text.
    std::map<std::string, Query> by_id;
    for (const Query& q : all_queries) by_id[q.id] = q;
    std::vector<Query> queries;
    for (const Ranking& r : input) {
        auto it = by_id.find(r.query_id);
        if (it == by_id.end())
            throw ConfigError("run query '" + r.query_id + "' has no text in " + cfg.queries_path);
        queries.push_back(it->second);
    }

    auto backend = make_backend(cfg, *index, queries);
    auto stats = std::make_shared<StatsSink>();
    Pipeline p = run_source_stage(std::move(input)) >> get_text_stage(index) >>
                 reranker_stage(backend, cfg.reranker, stats);
    BatchOutcome outcome = run_pipeline_batch(p, queries, o.workers, cfg.continue_on_error);
    write_file(cfg.output_run_path, write_trec_run(outcome.rankings, cfg.run_tag));
    write_metadata(cfg, *stats, metadata_path(cfg));
    std::printf("reranked %zu queries (%s) -> %s\n", outcome.rankings.size(),
                strategy_name(cfg.reranker.strategy), cfg.output_run_path.c_str());
    for (const auto& [qid, msg] : outcome.errors)
        std::fprintf(stderr, "query %s failed: %s\n", qid.c_str(), msg.c_str());
    return 0;
}

int cmd_evaluate(const std::string& run_path, const std::string& qrels_path, std::size_t k,
                 const std::string& csv_path, const std::string& run_name) {
    std::vector<Ranking> rankings = parse_trec_run(read_file(run_path));
    Qrels qrels = parse_qrels(read_file(qrels_path));
    std::map<std::string, EvalResult> results;
    results[run_name] = mean_ndcg(rankings, qrels, k);
    std::fputs(render_report(results).c_str(), stdout);
    if (!csv_path.empty()) write_file(csv_path, render_csv(results));
    return 0;
}

// Never called: stands in for the real backend while the pipeline shape is
// validated (and during --dry-run, which must not touch the network).
class NullBackend : public Backend {
    ChatResponse complete(const ChatRequest&) override {
        throw BackendError("dry run must not call the backend");
    }
};

int cmd_pipeline(const Overrides& o, bool dry_run, const std::string& csv_path) {
    RunConfig cfg = resolve_config(o);
    auto index = std::make_shared<InvertedIndex>(open_index(cfg));
    std::vector<Query> queries = open_queries(cfg);

    // Shape check before any backend exists, so config mistakes report as
    // config errors.
    {
        Pipeline shape =
            build_pipeline(cfg, index, std::make_shared<NullBackend>(), nullptr);
        validate_pipeline(shape);
    }

    if (dry_run) {
        Pipeline p = build_pipeline(cfg, index, std::make_shared<NullBackend>(), nullptr);
        std::printf("pipeline:");
        bool has_rerank = false;
        for (const Stage& s : p.stages) {
            std::printf(" %s", s.name.c_str());
            if (s.name == "rerank") has_rerank = true;
        }
        std::printf("\n");
        std::size_t candidates = cfg.retrieve_k;
        for (const StageSpec& spec : effective_stages(cfg))
            if (spec.name == "retrieve" && spec.param) candidates = *spec.param;
        std::size_t per_query = has_rerank ? estimate_calls_per_query(cfg, candidates) : 0;
        std::printf("queries: %zu\nestimated backend calls: up to %zu (%zu per query)\n",
                    queries.size(), per_query * queries.size(), per_query);
        return 0;
    }

    auto backend = make_backend(cfg, *index, queries);
    auto stats = std::make_shared<StatsSink>();
    Pipeline p = build_pipeline(cfg, index, backend, stats);

    BatchOutcome outcome = run_pipeline_batch(p, queries, o.workers, cfg.continue_on_error);
    write_file(cfg.output_run_path, write_trec_run(outcome.rankings, cfg.run_tag));
    write_metadata(cfg, *stats, metadata_path(cfg));
    std::printf("ran %zu queries -> %s\n", outcome.rankings.size(), cfg.output_run_path.c_str());
    for (const auto& [qid, msg] : outcome.errors)
        std::fprintf(stderr, "query %s failed: %s\n", qid.c_str(), msg.c_str());

    if (!cfg.qrels_path.empty()) {
        Qrels qrels = parse_qrels(read_file(cfg.qrels_path));
        std::map<std::string, EvalResult> results;
        results[cfg.run_tag] = mean_ndcg(outcome.rankings, qrels, cfg.k_eval);
        std::string report = render_report(results);
        std::fputs(report.c_str(), stdout);
        write_file(cfg.output_run_path + ".report.txt", report);
        if (!csv_path.empty()) write_file(csv_path, render_csv(results));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"genrank: BM25 retrieval + LLM generative reranking toolkit"};
    app.require_subcommand(1);

    Overrides o;
    bool force = false;
    bool dry_run = false;
    std::optional<std::size_t> retrieve_k;
    std::string run_path, qrels_path, csv_path, run_name = "run";
    std::size_t eval_k = 10;

    auto* index_cmd = app.add_subcommand("index", "build and persist the inverted index");
    index_cmd->add_option("--config", o.config_path, "config file path")->required();
    index_cmd->add_flag("--force", force, "overwrite an existing index");

    auto* retrieve_cmd = app.add_subcommand("retrieve", "BM25 top-k run for all queries");
    retrieve_cmd->add_option("--config", o.config_path, "config file path")->required();
    retrieve_cmd->add_option("-k,--k", retrieve_k, "retrieval depth");

    auto* rerank_cmd = app.add_subcommand("rerank", "rerank an existing TREC run");
    add_common_overrides(rerank_cmd, o);
    rerank_cmd->add_option("--run", run_path, "input TREC run file")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "nDCG@k of a run against qrels");
    eval_cmd->add_option("--run", run_path, "TREC run file")->required();
    eval_cmd->add_option("--qrels", qrels_path, "TREC qrels file")->required();
    eval_cmd->add_option("-k,--k", eval_k, "cutoff (default 10)");
    eval_cmd->add_option("--csv", csv_path, "also write CSV here");
    eval_cmd->add_option("--name", run_name, "run name shown in the report");

    auto* pipeline_cmd = app.add_subcommand("pipeline", "end-to-end retrieve/get_text/rerank/eval");
    add_common_overrides(pipeline_cmd, o);
    pipeline_cmd->add_flag("--dry-run", dry_run, "print resolved stages and call estimate only");
    pipeline_cmd->add_option("--csv", csv_path, "write the evaluation CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(index_cmd)) return cmd_index(o, force);
        if (app.got_subcommand(retrieve_cmd)) return cmd_retrieve(o, retrieve_k);
        if (app.got_subcommand(rerank_cmd)) return cmd_rerank(o, run_path);
        if (app.got_subcommand(eval_cmd))
            return cmd_evaluate(run_path, qrels_path, eval_k, csv_path, run_name);
        if (app.got_subcommand(pipeline_cmd)) return cmd_pipeline(o, dry_run, csv_path);
    } catch (const BackendError& e) {
        std::fprintf(stderr, "backend error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
