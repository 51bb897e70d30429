#include <doctest.h>

#include "minirank/perf.hpp"
#include "minirank/tokenizer.hpp"

using namespace minirank;

namespace {

ModelConfig tiny_config(int vocab_size) {
    ModelConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_layers = 1;
    cfg.d_ff = 12;
    cfg.max_seq_len = 12;
    cfg.seed = 21;
    return cfg;
}

Vocab test_vocab() {
    return build_vocab(std::vector<std::string>{"alpha beta gamma delta epsilon zeta eta theta"}, 16);
}

PerfReport fake_report(const std::string& scenario, double mean_ms, double throughput,
                       int batch) {
    PerfReport r;
    r.scenario = scenario;
    r.mean_ms = mean_ms;
    r.throughput = throughput;
    r.batch_size = batch;
    return r;
}

} // namespace

TEST_CASE("query embedding profile measures single 20-token queries") {
    Vocab vocab = test_vocab();
    EmbedderModel m = init_embedder(tiny_config(vocab.size()), 6);
    PerfReport r = profile_query_embedding(m, vocab, 10);
    CHECK(r.scenario == "query_embedding");
    CHECK(r.batch_size == 1);
    CHECK(r.token_length == 20);
    CHECK(r.measured_iters == 10);
    CHECK(r.samples_ms.size() == 10);
    CHECK(r.mean_ms > 0.0);
    CHECK(r.throughput > 0.0);

    // mean lies within [min, max] of the raw samples
    double lo = r.samples_ms[0], hi = r.samples_ms[0];
    for (double s : r.samples_ms) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    // averaging can round a hair past the extremes when samples nearly tie
    CHECK(r.mean_ms >= lo * (1.0 - 1e-12));
    CHECK(r.mean_ms <= hi * (1.0 + 1e-12));
    CHECK(r.p50_ms >= lo * (1.0 - 1e-12));
    CHECK(r.p95_ms <= hi * (1.0 + 1e-12));
    CHECK(r.p50_ms <= r.p95_ms);

    CHECK_THROWS_AS(profile_query_embedding(m, vocab, 5), std::invalid_argument);
}

TEST_CASE("indexing profile reports batches of 64 max-length passages") {
    Vocab vocab = test_vocab();
    EmbedderModel m = init_embedder(tiny_config(vocab.size()), 6);
    PerfReport r = profile_indexing(m, vocab, 640);
    CHECK(r.scenario == "passage_indexing");
    CHECK(r.batch_size == 64);
    CHECK(r.token_length == m.config.max_seq_len);
    CHECK(r.measured_iters == 10);
    CHECK(r.throughput > 0.0);

    CHECK_THROWS_AS(profile_indexing(m, vocab, 100), std::invalid_argument);
}

TEST_CASE("rerank profile times a full candidate batch per iteration") {
    Vocab vocab = test_vocab();
    RerankerModel m = init_reranker(tiny_config(vocab.size()));
    PerfReport r = profile_rerank(m, vocab, 5, 10);
    CHECK(r.scenario == "rerank");
    CHECK(r.batch_size == 5);
    CHECK(r.samples_ms.size() == 10);
    CHECK(r.mean_ms > 0.0);
    // throughput counts candidates, not iterations
    CHECK(r.throughput == doctest::Approx(1000.0 * 5 / r.mean_ms).epsilon(1e-9));

    CHECK_THROWS_AS(profile_rerank(m, vocab, 0), std::invalid_argument);
}

TEST_CASE("pipeline comparison computes the indexing throughput ratio") {
    PerfReport small = fake_report("passage_indexing", 1.0, 558.4, 64);
    PerfReport large = fake_report("passage_indexing", 8.0, 68.7, 64);
    PerfReport rerank = fake_report("rerank", 25.0, 1600.0, 40);

    PipelineComparison cmp = compare_pipelines(small, large, rerank);
    CHECK(cmp.indexing_throughput_ratio == doctest::Approx(8.128).epsilon(1e-3));
    CHECK(cmp.added_query_latency_ms == 25.0);
    // narrative rounds the ratio to one decimal
    CHECK(cmp.narrative.find("8.1x faster") != std::string::npos);
    CHECK(cmp.narrative.find("25.0 ms") != std::string::npos);

    SUBCASE("identical pipelines give a ratio of exactly 1") {
        PipelineComparison same = compare_pipelines(small, small, rerank);
        CHECK(same.indexing_throughput_ratio == 1.0);
    }

    SUBCASE("mismatched scenarios are rejected") {
        CHECK_THROWS_AS(compare_pipelines(small, rerank, rerank), std::invalid_argument);
    }

    SUBCASE("zero denominator throughput is rejected") {
        PerfReport zero = fake_report("passage_indexing", 1.0, 0.0, 64);
        CHECK_THROWS_AS(compare_pipelines(small, zero, rerank), std::invalid_argument);
    }
}

TEST_CASE("perf report JSON round-trips") {
    PerfReport r;
    r.scenario = "rerank";
    r.mean_ms = 1.25;
    r.p50_ms = 1.0;
    r.p95_ms = 2.0;
    r.throughput = 800.0;
    r.batch_size = 40;
    r.token_length = 32;
    r.warmup_iters = 3;
    r.measured_iters = 10;
    r.hardware_note = "1 core";
    r.samples_ms = {1.0, 1.5};

    PerfReport back = parse_perf_report(perf_report_json(r));
    CHECK(back.scenario == r.scenario);
    CHECK(back.mean_ms == r.mean_ms);
    CHECK(back.p50_ms == r.p50_ms);
    CHECK(back.p95_ms == r.p95_ms);
    CHECK(back.throughput == r.throughput);
    CHECK(back.batch_size == r.batch_size);
    CHECK(back.token_length == r.token_length);
    CHECK(back.warmup_iters == r.warmup_iters);
    CHECK(back.measured_iters == r.measured_iters);
    CHECK(back.hardware_note == r.hardware_note);
    CHECK(back.samples_ms == r.samples_ms);
}

TEST_CASE("perf report text names the scenario and headline numbers") {
    PerfReport r;
    r.scenario = "query_embedding";
    r.mean_ms = 3.125;
    r.p50_ms = 3.0;
    r.p95_ms = 4.0;
    r.throughput = 320.0;
    r.batch_size = 1;
    r.token_length = 20;
    r.warmup_iters = 3;
    r.measured_iters = 100;
    std::string text = perf_report_text(r);
    CHECK(text.find("query_embedding") != std::string::npos);
    CHECK(text.find("3.125") != std::string::npos);
    CHECK(text.find("320.000") != std::string::npos);
}
