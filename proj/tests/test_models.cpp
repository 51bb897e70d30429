#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "minirank/biencoder.hpp"
#include "minirank/checkpoint.hpp"
#include "minirank/crossencoder.hpp"
#include "minirank/util.hpp"

using namespace minirank;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config(int vocab_size, uint64_t seed = 9) {
    ModelConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_layers = 1;
    cfg.d_ff = 12;
    cfg.max_seq_len = 8;
    cfg.seed = seed;
    return cfg;
}

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("minirank_models_" + name)).string();
}

Vocab test_vocab() {
    return build_vocab(std::vector<std::string>{"alpha beta gamma delta epsilon zeta eta theta"}, 16);
}

} // namespace

TEST_CASE("checkpoint save/load round-trips bit-exactly") {
    ModelConfig cfg = tiny_config(16);
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.params = init_params(cfg);
    ckpt.extra["projection"] = Eigen::MatrixXd::Random(8, 4);

    std::string path = temp_path("ckpt.bin");
    save_checkpoint(ckpt, path);
    Checkpoint back = load_checkpoint(path);
    CHECK(back.config == cfg);
    CHECK(flatten(back.params) == flatten(ckpt.params));
    CHECK(back.extra.at("projection") == ckpt.extra.at("projection"));
    CHECK(checkpoint_fingerprint(back) == checkpoint_fingerprint(ckpt));
    std::remove(path.c_str());
}

TEST_CASE("checkpoint fingerprint changes when a parameter changes") {
    ModelConfig cfg = tiny_config(16);
    Checkpoint a{cfg, init_params(cfg), {}};
    Checkpoint b = a;
    b.params.token_embedding(0, 0) += 1e-9;
    CHECK(checkpoint_fingerprint(a) != checkpoint_fingerprint(b));
}

TEST_CASE("zero-head reranker scores the bias for every pair") {
    Vocab vocab = test_vocab();
    RerankerModel m = init_reranker(tiny_config(vocab.size()));
    m.head_weight.setZero();
    m.head_bias = 0.25;
    CHECK(score(m, vocab, "alpha", "beta") == 0.25);
    CHECK(score(m, vocab, "gamma delta", "epsilon") == 0.25);
}

TEST_CASE("score_batch equals looping over scalar score") {
    Vocab vocab = test_vocab();
    RerankerModel m = init_reranker(tiny_config(vocab.size()));
    std::vector<std::string> passages{"beta", "gamma delta", "zeta eta theta"};
    std::vector<double> batch = score_batch(m, vocab, "alpha", passages);
    REQUIRE(batch.size() == passages.size());
    for (size_t i = 0; i < passages.size(); ++i)
        CHECK(batch[i] == score(m, vocab, "alpha", passages[i]));
    CHECK(score_batch(m, vocab, "alpha", {}).empty());
}

TEST_CASE("score is asymmetric in query and passage on most random pairs") {
    Vocab vocab = test_vocab();
    RerankerModel m = init_reranker(tiny_config(vocab.size(), 33));
    const char* words[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
    Rng rng(7);
    int asymmetric = 0, total = 0;
    for (int i = 0; i < 50; ++i) {
        std::string a = std::string(words[rng.next_below(6)]) + " " + words[rng.next_below(6)];
        std::string b = std::string(words[rng.next_below(6)]) + " " +
                        words[rng.next_below(6)] + " " + words[rng.next_below(6)];
        if (a == b) continue;
        ++total;
        if (score(m, vocab, a, b) != score(m, vocab, b, a)) ++asymmetric;
    }
    CHECK(asymmetric >= total * 9 / 10);
}

TEST_CASE("rerank orders by logit with id tie-break and truncates") {
    Vocab vocab = test_vocab();
    RerankerModel m = init_reranker(tiny_config(vocab.size()));

    SUBCASE("descending logits and 1-based ranks") {
        auto ranked = rerank(m, vocab, "alpha", {{"d1", "beta"}, {"d2", "gamma"}}, 2);
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0].logit >= ranked[1].logit);
        CHECK(ranked[0].rank == 1);
        CHECK(ranked[1].rank == 2);
    }

    SUBCASE("equal logits break ties by passage id ascending") {
        m.head_weight.setZero();  // every logit equals the bias
        auto ranked = rerank(m, vocab, "alpha", {{"d2", "beta"}, {"d1", "gamma"}}, 2);
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0].passage_id == "d1");
        CHECK(ranked[1].passage_id == "d2");
    }

    SUBCASE("top_n larger than candidate count returns all") {
        auto ranked = rerank(m, vocab, "alpha", {{"d1", "beta"}}, 10);
        CHECK(ranked.size() == 1);
    }
}

TEST_CASE("reranker save/load preserves scores exactly") {
    Vocab vocab = test_vocab();
    RerankerModel m = init_reranker(tiny_config(vocab.size(), 41));
    std::string path = temp_path("reranker.ckpt");
    save_reranker(m, path);
    RerankerModel back = load_reranker(path);
    CHECK(score(back, vocab, "alpha beta", "gamma delta") ==
          score(m, vocab, "alpha beta", "gamma delta"));
    CHECK(reranker_fingerprint(back) == reranker_fingerprint(m));
    std::remove(path.c_str());
}

TEST_CASE("embeddings are unit-norm and deterministic") {
    Vocab vocab = test_vocab();
    EmbedderModel m = init_embedder(tiny_config(vocab.size()), 6);
    Eigen::VectorXd a = embed(m, vocab, "alpha beta gamma");
    Eigen::VectorXd b = embed(m, vocab, "alpha beta gamma");
    CHECK(a == b);
    CHECK(std::abs(a.norm() - 1.0) < 1e-5);
    CHECK(a.size() == 6);

    Eigen::VectorXd c = embed(m, vocab, "delta epsilon");
    CHECK(std::abs(a.dot(c)) <= 1.0 + 1e-12);
    // dot of unit vectors equals the explicit cosine formula
    CHECK(a.dot(c) == doctest::Approx(a.dot(c) / (a.norm() * c.norm())).epsilon(1e-6));
}

TEST_CASE("a zero projection embeds everything to the zero vector") {
    Vocab vocab = test_vocab();
    EmbedderModel m = init_embedder(tiny_config(vocab.size()), 6);
    m.projection.setZero();
    CHECK(embed(m, vocab, "alpha").isZero());
}

TEST_CASE("query and passage prefixes change the embedding when set") {
    Vocab vocab = test_vocab();
    EmbedderModel m = init_embedder(tiny_config(vocab.size()), 6);
    Eigen::VectorXd plain_q = embed_query(m, vocab, "alpha beta");
    Eigen::VectorXd plain_p = embed_passage(m, vocab, "alpha beta");
    CHECK(plain_q == plain_p);  // prefixes default to empty

    m.query_prefix = "gamma";
    m.passage_prefix = "delta";
    CHECK(embed_query(m, vocab, "alpha beta") != plain_q);
    CHECK(embed_passage(m, vocab, "alpha beta") != plain_p);
}

TEST_CASE("embedder save/load preserves embeddings exactly") {
    Vocab vocab = test_vocab();
    EmbedderModel m = init_embedder(tiny_config(vocab.size(), 43), 6);
    std::string path = temp_path("embedder.ckpt");
    save_embedder(m, path);
    EmbedderModel back = load_embedder(path);
    CHECK(embed(back, vocab, "alpha beta gamma") == embed(m, vocab, "alpha beta gamma"));
    CHECK(embedder_fingerprint(back) == embedder_fingerprint(m));
    std::remove(path.c_str());
}
