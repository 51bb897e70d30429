#pragma once

#include <string>
#include <vector>

#include "minirank/biencoder.hpp"
#include "minirank/crossencoder.hpp"

namespace minirank {

struct PerfReport {
    std::string scenario;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double throughput = 0.0;  // items/sec
    int batch_size = 1;
    int token_length = 0;
    int warmup_iters = 0;
    int measured_iters = 0;
    std::string hardware_note;
    std::vector<double> samples_ms;  // raw measured samples, warmup excluded
};

std::string perf_report_json(const PerfReport& report);
PerfReport parse_perf_report(const std::string& json_text);
std::string perf_report_text(const PerfReport& report);

/// Per-call latency of embedding one synthesized 20-token query.
PerfReport profile_query_embedding(const EmbedderModel& embedder, const Vocab& vocab,
                                   int n_iters, int warmup = 3);

/// Indexing throughput over synthetic max-length passages in batches of 64.
PerfReport profile_indexing(const EmbedderModel& embedder, const Vocab& vocab,
                            int n_passages);

/// Total latency to score n_candidates passages for one query.
PerfReport profile_rerank(const RerankerModel& reranker, const Vocab& vocab,
                          int n_candidates = 40, int n_iters = 10, int warmup = 3);

struct PipelineComparison {
    double indexing_throughput_ratio = 0.0;  // small-model / large-model
    double added_query_latency_ms = 0.0;     // reranker stage cost
    std::string narrative;
};

/// Trade-off between a one-stage (large embedder) and a two-stage (small
/// embedder + reranker) pipeline, from their profile reports.
PipelineComparison compare_pipelines(const PerfReport& small_indexing,
                                     const PerfReport& large_indexing,
                                     const PerfReport& rerank_latency);

} // namespace minirank
