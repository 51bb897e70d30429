#include "minirank/trainer.hpp"

#include "minirank/util.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace minirank {

std::string to_string(LossKind kind) { return kind == LossKind::kBce ? "bce" : "infonce"; }

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "bce") return LossKind::kBce;
    if (s == "infonce") return LossKind::kInfoNce;
    throw std::invalid_argument("unknown loss kind: " + s);
}

AdamOptimizer::AdamOptimizer(size_t n_params, double lr, double weight_decay,
                             int total_steps, double warmup_fraction, double beta1,
                             double beta2, double eps)
    : base_lr_(lr),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      total_steps_(total_steps),
      warmup_steps_(std::max(1, static_cast<int>(total_steps * warmup_fraction))),
      m_(n_params, 0.0),
      v_(n_params, 0.0) {}

double AdamOptimizer::current_lr() const {
    int t = t_ + 1;
    if (t <= warmup_steps_) return base_lr_ * static_cast<double>(t) / warmup_steps_;
    double remain = static_cast<double>(total_steps_ - t) /
                    std::max(1, total_steps_ - warmup_steps_);
    return base_lr_ * std::max(0.0, remain);
}

void AdamOptimizer::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("optimizer size mismatch");
    double lr = current_lr();
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        double mhat = m_[i] / bc1;
        double vhat = v_[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * params[i]);
    }
}

namespace {

std::vector<double> flatten_reranker(const RerankerModel& m) {
    std::vector<double> flat = flatten(m.backbone);
    flat.insert(flat.end(), m.head_weight.data(), m.head_weight.data() + m.head_weight.size());
    flat.push_back(m.head_bias);
    return flat;
}

void unflatten_reranker(const std::vector<double>& flat, RerankerModel& m) {
    long nb = num_params(m.backbone);
    std::vector<double> bb(flat.begin(), flat.begin() + nb);
    unflatten(bb, m.backbone);
    for (int i = 0; i < m.head_weight.size(); ++i)
        m.head_weight(i) = flat[static_cast<size_t>(nb + i)];
    m.head_bias = flat.back();
}

std::vector<double> flatten_gradients(const RerankerGradients& g) {
    std::vector<double> flat = flatten(g.backbone);
    flat.insert(flat.end(), g.head_weight.data(), g.head_weight.data() + g.head_weight.size());
    flat.push_back(g.head_bias);
    return flat;
}

} // namespace

RerankerModel train_reranker(const Dataset& dataset, const std::vector<MinedExample>& mined,
                             const Vocab& vocab, const ModelConfig& model_config,
                             const TrainConfig& train_config,
                             const std::function<void(int, double)>& on_step) {
    if (mined.empty()) throw std::invalid_argument("empty training set");

    std::unordered_map<std::string, const Passage*> by_id;
    for (const auto& p : dataset.passages) by_id[p.id] = &p;
    std::unordered_map<std::string, const Query*> q_by_id;
    for (const auto& q : dataset.queries) q_by_id[q.id] = &q;

    std::vector<ListExample> lists;
    std::vector<const std::map<std::string, int>*> judged;  // parallel to lists
    for (const auto& ex : mined) {
        auto qit = q_by_id.find(ex.query_id);
        auto pit = by_id.find(ex.positive_id);
        if (qit == q_by_id.end() || pit == by_id.end())
            throw std::invalid_argument("mined example references unknown ids: " + ex.query_id);
        ListExample le;
        le.query = qit->second->text;
        le.positive = pit->second->text;
        int n = std::min<int>(train_config.n_negatives,
                              static_cast<int>(ex.negative_ids.size()));
        for (int i = 0; i < n; ++i) {
            auto nit = by_id.find(ex.negative_ids[static_cast<size_t>(i)]);
            if (nit == by_id.end())
                throw std::invalid_argument("mined negative references unknown id");
            le.negatives.push_back(nit->second->text);
        }
        if (le.negatives.empty()) continue;
        lists.push_back(std::move(le));
        auto jit = dataset.qrels.judgments.find(ex.query_id);
        judged.push_back(jit == dataset.qrels.judgments.end() ? nullptr : &jit->second);
    }
    if (lists.empty()) throw std::invalid_argument("no usable training lists");

    ModelConfig cfg = model_config;
    cfg.seed = train_config.seed;
    RerankerModel model = init_reranker(cfg);

    std::vector<double> flat = flatten_reranker(model);
    AdamOptimizer opt(flat.size(), train_config.learning_rate, train_config.weight_decay,
                      train_config.steps, train_config.warmup_fraction);

    Rng rng(train_config.seed + 1);
    // random corpus negative for list li, skipping judged-relevant passages
    auto draw_random_negative = [&](size_t li) -> const std::string* {
        for (int tries = 0; tries < 100; ++tries) {
            const Passage& p = dataset.passages[rng.next_below(dataset.passages.size())];
            if (judged[li]) {
                auto jit = judged[li]->find(p.id);
                if (jit != judged[li]->end() && jit->second > 0) continue;
            }
            return &p.text;
        }
        return nullptr;
    };

    for (int step = 0; step < train_config.steps; ++step) {
        RerankerGradients grads = zero_gradients(model);
        double loss = 0.0;
        if (train_config.loss == LossKind::kInfoNce) {
            std::vector<ListExample> batch;
            for (int b = 0; b < train_config.batch_size; ++b) {
                size_t li = rng.next_below(lists.size());
                ListExample le = lists[li];
                for (int r = 0; r < train_config.n_random_negatives; ++r)
                    if (const std::string* neg = draw_random_negative(li))
                        le.negatives.push_back(*neg);
                batch.push_back(std::move(le));
            }
            loss = batch_loss_infonce(model, vocab, batch, train_config.tau, &grads);
        } else {
            // point-wise pairs over the same positives plus mined/random negatives
            std::vector<PairExample> batch;
            for (int b = 0; b < train_config.batch_size; ++b) {
                size_t li = rng.next_below(lists.size());
                const ListExample& le = lists[li];
                batch.push_back({le.query, le.positive, 1});
                const std::string& neg = le.negatives[rng.next_below(le.negatives.size())];
                batch.push_back({le.query, neg, 0});
                for (int r = 0; r < train_config.n_random_negatives; ++r)
                    if (const std::string* rneg = draw_random_negative(li))
                        batch.push_back({le.query, *rneg, 0});
            }
            loss = batch_loss_bce(model, vocab, batch, &grads);
        }
        opt.step(flat, flatten_gradients(grads));
        unflatten_reranker(flat, model);
        if (on_step) on_step(step, loss);
    }
    return model;
}

} // namespace minirank
