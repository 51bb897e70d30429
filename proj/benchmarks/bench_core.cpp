#include <benchmark/benchmark.h>

#include "minirank/crossencoder.hpp"
#include "minirank/index.hpp"
#include "minirank/pipeline.hpp"
#include "minirank/tokenizer.hpp"
#include "minirank/util.hpp"

using namespace minirank;

namespace {

ModelConfig bench_config(int vocab_size, int d_model, int n_layers) {
    ModelConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.d_model = d_model;
    cfg.n_heads = 2;
    cfg.n_layers = n_layers;
    cfg.d_ff = 2 * d_model;
    cfg.max_seq_len = 32;
    cfg.seed = 1;
    return cfg;
}

Vocab bench_vocab() {
    std::string text;
    for (int i = 0; i < 200; ++i) {
        if (i) text += " ";
        text += "tok" + std::to_string(i);
    }
    return build_vocab(std::vector<std::string>{text}, 256);
}

std::string bench_text(const Vocab& vocab, Rng& rng, int n_words) {
    std::string text;
    for (int i = 0; i < n_words; ++i) {
        if (i) text += " ";
        text += vocab.id_to_token[static_cast<size_t>(
            Vocab::kNumSpecials + rng.next_below(200))];
    }
    return text;
}

void BM_EmbedPassage(benchmark::State& state) {
    Vocab vocab = bench_vocab();
    EmbedderModel model = init_embedder(
        bench_config(vocab.size(), static_cast<int>(state.range(0)),
                     static_cast<int>(state.range(1))),
        16);
    Rng rng(2);
    std::string text = bench_text(vocab, rng, 32);
    for (auto _ : state) benchmark::DoNotOptimize(embed_passage(model, vocab, text));
}
BENCHMARK(BM_EmbedPassage)->Args({32, 2})->Args({64, 4});

void BM_ScoreBatch(benchmark::State& state) {
    Vocab vocab = bench_vocab();
    RerankerModel model = init_reranker(bench_config(vocab.size(), 32, 2));
    Rng rng(3);
    std::string query = bench_text(vocab, rng, 12);
    std::vector<std::string> passages;
    for (long i = 0; i < state.range(0); ++i) passages.push_back(bench_text(vocab, rng, 32));
    for (auto _ : state) benchmark::DoNotOptimize(score_batch(model, vocab, query, passages));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreBatch)->Arg(10)->Arg(40);

void BM_SearchExact(benchmark::State& state) {
    Rng rng(4);
    int d = 16;
    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> vecs;
    for (long i = 0; i < state.range(0); ++i) {
        ids.push_back("v" + std::to_string(i));
        Eigen::VectorXd v(d);
        for (int j = 0; j < d; ++j) v(j) = rng.next_normal();
        vecs.push_back(v.normalized());
    }
    VectorIndex index = build_index(ids, vecs);
    Eigen::VectorXd q(d);
    for (int j = 0; j < d; ++j) q(j) = rng.next_normal();
    q.normalize();
    for (auto _ : state) benchmark::DoNotOptimize(search_exact(index, q, 10));
}
BENCHMARK(BM_SearchExact)->Arg(1000)->Arg(10000);

} // namespace

BENCHMARK_MAIN();
