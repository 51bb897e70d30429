#include "minirank/perf.hpp"

#include "minirank/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace minirank {

namespace {

using Clock = std::chrono::steady_clock;

// microsecond capture, millisecond reporting
double elapsed_ms(Clock::time_point start) {
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
    return static_cast<double>(us.count()) / 1000.0;
}

double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    double idx = p * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(idx);
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

void finalize_stats(PerfReport& report) {
    if (report.samples_ms.empty()) return;
    double total = 0.0;
    for (double s : report.samples_ms) total += s;
    report.mean_ms = total / static_cast<double>(report.samples_ms.size());
    std::vector<double> sorted = report.samples_ms;
    std::sort(sorted.begin(), sorted.end());
    report.p50_ms = percentile(sorted, 0.50);
    report.p95_ms = percentile(sorted, 0.95);
}

// deterministic synthetic text of exactly n_tokens words from the vocab
std::string synth_text(const Vocab& vocab, int n_tokens, Rng& rng) {
    std::string text;
    int n_words = vocab.size() - Vocab::kNumSpecials;
    if (n_words < 1) throw std::invalid_argument("vocab has no regular tokens");
    for (int i = 0; i < n_tokens; ++i) {
        if (i) text += " ";
        text += vocab.id_to_token[Vocab::kNumSpecials + rng.next_below(static_cast<uint64_t>(n_words))];
    }
    return text;
}

} // namespace

PerfReport profile_query_embedding(const EmbedderModel& embedder, const Vocab& vocab,
                                   int n_iters, int warmup) {
    if (n_iters < 10) throw std::invalid_argument("need at least 10 measured iterations");
    warmup = std::max(warmup, 3);
    PerfReport report;
    report.scenario = "query_embedding";
    report.batch_size = 1;
    report.token_length = 20;
    report.warmup_iters = warmup;
    report.measured_iters = n_iters;

    Rng rng(42);
    std::vector<std::string> queries;
    for (int i = 0; i < warmup + n_iters; ++i)
        queries.push_back(synth_text(vocab, 20, rng));

    for (int i = 0; i < warmup + n_iters; ++i) {
        auto t0 = Clock::now();
        volatile double sink = embed_query(embedder, vocab, queries[static_cast<size_t>(i)])(0);
        (void)sink;
        double ms = elapsed_ms(t0);
        if (i >= warmup) report.samples_ms.push_back(ms);
    }
    finalize_stats(report);
    report.throughput = report.mean_ms > 0 ? 1000.0 / report.mean_ms : 0.0;
    return report;
}

PerfReport profile_indexing(const EmbedderModel& embedder, const Vocab& vocab,
                            int n_passages) {
    constexpr int kBatch = 64;
    if (n_passages < kBatch * 10)
        throw std::invalid_argument("need at least 640 passages for a stable measurement");
    PerfReport report;
    report.scenario = "passage_indexing";
    report.batch_size = kBatch;
    report.token_length = embedder.config.max_seq_len;
    report.warmup_iters = 1;
    report.measured_iters = n_passages / kBatch;

    Rng rng(43);
    std::vector<std::string> passages;
    for (int i = 0; i < n_passages; ++i)
        passages.push_back(synth_text(vocab, embedder.config.max_seq_len, rng));

    // one warmup batch, excluded from throughput
    for (int i = 0; i < kBatch; ++i) {
        volatile double sink = embed_passage(embedder, vocab, passages[static_cast<size_t>(i)])(0);
        (void)sink;
    }

    auto t0 = Clock::now();
    int done = 0;
    for (int b = 0; b < report.measured_iters; ++b) {
        auto bt = Clock::now();
        for (int i = 0; i < kBatch; ++i, ++done) {
            volatile double sink =
                embed_passage(embedder, vocab, passages[static_cast<size_t>(done)])(0);
            (void)sink;
        }
        report.samples_ms.push_back(elapsed_ms(bt));
    }
    double total_s = elapsed_ms(t0) / 1000.0;
    finalize_stats(report);
    report.throughput = total_s > 0 ? static_cast<double>(done) / total_s : 0.0;
    return report;
}

PerfReport profile_rerank(const RerankerModel& reranker, const Vocab& vocab,
                          int n_candidates, int n_iters, int warmup) {
    if (n_candidates < 1) throw std::invalid_argument("n_candidates must be >= 1");
    n_iters = std::max(n_iters, 10);
    warmup = std::max(warmup, 3);
    PerfReport report;
    report.scenario = "rerank";
    report.batch_size = n_candidates;
    report.token_length = reranker.config.max_seq_len;
    report.warmup_iters = warmup;
    report.measured_iters = n_iters;

    Rng rng(44);
    std::string query = synth_text(vocab, 20, rng);
    std::vector<std::string> candidates;
    for (int i = 0; i < n_candidates; ++i)
        candidates.push_back(synth_text(vocab, reranker.config.max_seq_len, rng));

    for (int i = 0; i < warmup + n_iters; ++i) {
        auto t0 = Clock::now();
        auto logits = score_batch(reranker, vocab, query, candidates);
        volatile double sink = logits.empty() ? 0.0 : logits[0];
        (void)sink;
        double ms = elapsed_ms(t0);
        if (i >= warmup) report.samples_ms.push_back(ms);
    }
    finalize_stats(report);
    report.throughput = report.mean_ms > 0
                            ? 1000.0 * static_cast<double>(n_candidates) / report.mean_ms
                            : 0.0;
    return report;
}

PipelineComparison compare_pipelines(const PerfReport& small_indexing,
                                     const PerfReport& large_indexing,
                                     const PerfReport& rerank_latency) {
    if (small_indexing.scenario != large_indexing.scenario)
        throw std::invalid_argument("indexing reports have mismatched scenarios");
    if (!(large_indexing.throughput > 0))
        throw std::invalid_argument("large-model throughput must be positive");

    PipelineComparison cmp;
    cmp.indexing_throughput_ratio = small_indexing.throughput / large_indexing.throughput;
    cmp.added_query_latency_ms = rerank_latency.mean_ms;

    std::ostringstream ss;
    ss.precision(1);
    ss << std::fixed;
    ss << "Two-stage pipeline (small embedder + reranker) indexes "
       << cmp.indexing_throughput_ratio << "x faster than the one-stage large embedder ("
       << small_indexing.throughput << " vs " << large_indexing.throughput
       << " passages/sec) at the cost of " << cmp.added_query_latency_ms
       << " ms added rerank latency per query (" << rerank_latency.batch_size
       << " candidates).";
    cmp.narrative = ss.str();
    return cmp;
}

std::string perf_report_json(const PerfReport& r) {
    nlohmann::json j{{"scenario", r.scenario},
                     {"mean_ms", r.mean_ms},
                     {"p50_ms", r.p50_ms},
                     {"p95_ms", r.p95_ms},
                     {"throughput", r.throughput},
                     {"batch_size", r.batch_size},
                     {"token_length", r.token_length},
                     {"warmup_iters", r.warmup_iters},
                     {"measured_iters", r.measured_iters},
                     {"hardware_note", r.hardware_note},
                     {"samples_ms", r.samples_ms}};
    return j.dump(2);
}

PerfReport parse_perf_report(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    PerfReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.mean_ms = j.at("mean_ms").get<double>();
    r.p50_ms = j.at("p50_ms").get<double>();
    r.p95_ms = j.at("p95_ms").get<double>();
    r.throughput = j.at("throughput").get<double>();
    r.batch_size = j.at("batch_size").get<int>();
    r.token_length = j.at("token_length").get<int>();
    r.warmup_iters = j.at("warmup_iters").get<int>();
    r.measured_iters = j.at("measured_iters").get<int>();
    r.hardware_note = j.value("hardware_note", "");
    r.samples_ms = j.value("samples_ms", std::vector<double>{});
    return r;
}

std::string perf_report_text(const PerfReport& r) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::fixed;
    ss << r.scenario << ": mean " << r.mean_ms << " ms, p50 " << r.p50_ms << " ms, p95 "
       << r.p95_ms << " ms, throughput " << r.throughput << " items/sec (batch "
       << r.batch_size << ", " << r.token_length << " tokens, " << r.measured_iters
       << " iters after " << r.warmup_iters << " warmup)";
    return ss.str();
}

} // namespace minirank
