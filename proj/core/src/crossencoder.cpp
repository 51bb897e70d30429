#include "minirank/crossencoder.hpp"

#include "minirank/util.hpp"

#include <algorithm>

namespace minirank {

RerankerModel init_reranker(const ModelConfig& config) {
    RerankerModel m;
    m.config = config;
    m.backbone = init_params(config);
    // head drawn from the same stream family, offset so it differs from backbone
    Rng rng(config.seed ^ 0xa5a5a5a5ull);
    m.head_weight.resize(config.d_model);
    double std_dev = 1.0 / std::sqrt(static_cast<double>(config.d_model));
    for (int i = 0; i < config.d_model; ++i) m.head_weight(i) = rng.next_normal() * std_dev;
    m.head_bias = 0.0;
    return m;
}

double score(const RerankerModel& model, const Vocab& vocab, const std::string& query,
             const std::string& passage) {
    TokenSeq seq = encode_pair(vocab, query, passage, model.config.max_seq_len);
    ForwardResult fw = forward(model.backbone, model.config, seq, /*training=*/false);
    return model.head_weight.dot(fw.pooled) + model.head_bias;
}

std::vector<double> score_batch(const RerankerModel& model, const Vocab& vocab,
                                const std::string& query,
                                const std::vector<std::string>& passages) {
    std::vector<double> logits;
    logits.reserve(passages.size());
    for (const auto& p : passages) logits.push_back(score(model, vocab, query, p));
    return logits;
}

std::vector<ScoredPassage> rerank(const RerankerModel& model, const Vocab& vocab,
                                  const std::string& query,
                                  const std::vector<std::pair<std::string, std::string>>& candidates,
                                  int top_n) {
    if (top_n < 1) throw std::invalid_argument("top_n must be >= 1");
    std::vector<ScoredPassage> scored;
    scored.reserve(candidates.size());
    for (const auto& [id, text] : candidates)
        scored.push_back({id, score(model, vocab, query, text), 0});
    std::sort(scored.begin(), scored.end(), [](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.logit != b.logit) return a.logit > b.logit;
        return a.passage_id < b.passage_id;
    });
    if (static_cast<int>(scored.size()) > top_n) scored.resize(static_cast<size_t>(top_n));
    for (size_t i = 0; i < scored.size(); ++i) scored[i].rank = static_cast<int>(i) + 1;
    return scored;
}

void save_reranker(const RerankerModel& model, const std::string& path) {
    Checkpoint ckpt;
    ckpt.config = model.config;
    ckpt.params = model.backbone;
    ckpt.extra["head.weight"] = model.head_weight;
    ckpt.extra["head.bias"] = Eigen::MatrixXd::Constant(1, 1, model.head_bias);
    save_checkpoint(ckpt, path);
}

RerankerModel load_reranker(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    if (!ckpt.extra.count("head.weight") || !ckpt.extra.count("head.bias"))
        throw std::runtime_error("checkpoint is not a reranker (missing head): " + path);
    RerankerModel m;
    m.config = ckpt.config;
    m.backbone = std::move(ckpt.params);
    m.head_weight = ckpt.extra.at("head.weight").col(0);
    m.head_bias = ckpt.extra.at("head.bias")(0, 0);
    return m;
}

uint64_t reranker_fingerprint(const RerankerModel& model) {
    Checkpoint ckpt;
    ckpt.config = model.config;
    ckpt.params = model.backbone;
    ckpt.extra["head.weight"] = model.head_weight;
    ckpt.extra["head.bias"] = Eigen::MatrixXd::Constant(1, 1, model.head_bias);
    return checkpoint_fingerprint(ckpt);
}

} // namespace minirank
