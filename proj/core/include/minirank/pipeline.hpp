#pragma once

#include <optional>
#include <string>
#include <vector>

#include "minirank/biencoder.hpp"
#include "minirank/corpus.hpp"
#include "minirank/crossencoder.hpp"
#include "minirank/index.hpp"

namespace minirank {

struct PipelineConfig {
    int k_retrieve = 100;
    int k_rerank = 0;  // 0 means k_retrieve
    int final_k = 10;
    bool use_ann = false;
    int n_probe = 1;
    std::string label;

    int effective_k_rerank() const { return k_rerank > 0 ? k_rerank : k_retrieve; }
    void validate() const;
};

struct StageTimings {
    double embed_ms = 0.0;
    double search_ms = 0.0;
    double rerank_ms = 0.0;
};

struct RankedItem {
    std::string id;
    double score = 0.0;
};

struct QueryResult {
    std::string query_id;
    std::vector<RankedItem> ranked;  // length <= final_k
    StageTimings timings;
};

struct RetrievalRun {
    std::string label;
    std::vector<QueryResult> results;
    double indexing_seconds = 0.0;
    double passages_per_sec = 0.0;
    uint64_t embedder_fp = 0;
};

/// Embeds all passages and builds the index; records passages/sec.
VectorIndex run_indexing(const Dataset& dataset, const EmbedderModel& embedder,
                         const Vocab& vocab, double* passages_per_sec = nullptr,
                         double* wall_seconds = nullptr);

/// Retrieve k_retrieve, optionally rerank the top k_rerank, truncate to
/// final_k. The index must have been built with the same embedder (checked
/// via fingerprint). rerank_calls, when given, counts reranker scorings.
QueryResult run_query(const VectorIndex& index, const EmbedderModel& embedder,
                      uint64_t embedder_fp, const Vocab& vocab,
                      const PipelineConfig& config, const Query& query,
                      const Dataset& dataset, const RerankerModel* reranker,
                      long* rerank_calls = nullptr);

RetrievalRun run_pipeline(const Dataset& dataset, const VectorIndex& index,
                          const EmbedderModel& embedder, const Vocab& vocab,
                          const PipelineConfig& config, const RerankerModel* reranker);

struct BenchmarkSpec {
    const EmbedderModel* embedder = nullptr;
    std::string embedder_label;
    // (label, model); a baseline retriever-only run is always emitted first
    std::vector<std::pair<std::string, const RerankerModel*>> rerankers;
};

struct BenchmarkResult {
    std::vector<RetrievalRun> runs;
    int indexing_passes = 0;
    std::vector<std::string> errors;  // per-config failures; other configs continue
};

/// Runs the benchmark matrix: one indexing pass per embedder, reused across
/// its rerankers; baseline row first, then one "+ reranker" row each.
BenchmarkResult run_benchmark(const Dataset& dataset, const Vocab& vocab,
                              const std::vector<BenchmarkSpec>& specs,
                              const PipelineConfig& config);

/// JSON-lines run files: one object per query with ranked ids, scores, timings.
void save_run(const RetrievalRun& run, const std::string& path);
RetrievalRun load_run(const std::string& path);

} // namespace minirank
