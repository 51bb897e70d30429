#include "minirank/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minirank {

std::pair<double, double> bce_loss(double logit, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
    double y = static_cast<double>(label);
    // loss = max(l,0) - l*y + log(1 + exp(-|l|))
    double loss = std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
    double p = logit >= 0 ? 1.0 / (1.0 + std::exp(-logit))
                          : std::exp(logit) / (1.0 + std::exp(logit));
    return {loss, p - y};
}

InfoNceResult infonce_loss(double pos_logit, const std::vector<double>& neg_logits,
                           double tau) {
    if (neg_logits.empty()) throw std::invalid_argument("need at least one negative");
    if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");

    const size_t n = neg_logits.size();
    std::vector<double> scaled(n + 1);
    scaled[0] = pos_logit / tau;
    for (size_t i = 0; i < n; ++i) scaled[i + 1] = neg_logits[i] / tau;
    double m = *std::max_element(scaled.begin(), scaled.end());
    double denom = 0.0;
    for (double s : scaled) denom += std::exp(s - m);

    InfoNceResult r;
    r.loss = -(scaled[0] - m - std::log(denom));
    // gradients: (softmax - onehot(pos)) / tau
    double p0 = std::exp(scaled[0] - m) / denom;
    r.pos_grad = (p0 - 1.0) / tau;
    r.neg_grads.resize(n);
    for (size_t i = 0; i < n; ++i)
        r.neg_grads[i] = std::exp(scaled[i + 1] - m) / denom / tau;
    return r;
}

RerankerGradients zero_gradients(const RerankerModel& model) {
    RerankerGradients g;
    g.backbone = zeros_like(model.backbone);
    g.head_weight = Eigen::VectorXd::Zero(model.config.d_model);
    g.head_bias = 0.0;
    return g;
}

double score_with_grad(const RerankerModel& model, const Vocab& vocab,
                       const std::string& query, const std::string& passage,
                       double upstream, RerankerGradients& grads) {
    TokenSeq seq = encode_pair(vocab, query, passage, model.config.max_seq_len);
    ForwardResult fw = forward(model.backbone, model.config, seq, /*training=*/true);
    double logit = model.head_weight.dot(fw.pooled) + model.head_bias;
    if (upstream != 0.0) {
        ParameterSet bb = backward(*fw.trace, model.backbone, model.config,
                                   model.head_weight * upstream);
        axpy(grads.backbone, bb, 1.0);
        grads.head_weight += fw.pooled * upstream;
        grads.head_bias += upstream;
    }
    return logit;
}

double batch_loss_bce(const RerankerModel& model, const Vocab& vocab,
                      const std::vector<PairExample>& batch, RerankerGradients* grads) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& ex : batch) {
        if (grads) {
            // two passes: logit first, then backprop with the loss gradient
            double logit = score(model, vocab, ex.query, ex.passage);
            auto [loss, dlogit] = bce_loss(logit, ex.label);
            score_with_grad(model, vocab, ex.query, ex.passage, dlogit * inv_n, *grads);
            total += loss;
        } else {
            total += bce_loss(score(model, vocab, ex.query, ex.passage), ex.label).first;
        }
    }
    return total * inv_n;
}

double batch_loss_infonce(const RerankerModel& model, const Vocab& vocab,
                          const std::vector<ListExample>& batch, double tau,
                          RerankerGradients* grads) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& ex : batch) {
        if (ex.negatives.empty()) throw std::invalid_argument("list example without negatives");
        double pos = score(model, vocab, ex.query, ex.positive);
        std::vector<double> negs = score_batch(model, vocab, ex.query, ex.negatives);
        InfoNceResult r = infonce_loss(pos, negs, tau);
        total += r.loss;
        if (grads) {
            score_with_grad(model, vocab, ex.query, ex.positive, r.pos_grad * inv_n, *grads);
            for (size_t i = 0; i < ex.negatives.size(); ++i)
                score_with_grad(model, vocab, ex.query, ex.negatives[i],
                                r.neg_grads[i] * inv_n, *grads);
        }
    }
    return total * inv_n;
}

double batch_loss(const RerankerModel& model, const Vocab& vocab,
                  const std::vector<Example>& batch, double tau, RerankerGradients* grads) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    bool all_pairs = true, all_lists = true;
    for (const auto& ex : batch) {
        if (std::holds_alternative<PairExample>(ex)) all_lists = false;
        else all_pairs = false;
    }
    if (!all_pairs && !all_lists)
        throw std::invalid_argument("batch mixes pair and list examples");
    if (all_pairs) {
        std::vector<PairExample> pairs;
        for (const auto& ex : batch) pairs.push_back(std::get<PairExample>(ex));
        return batch_loss_bce(model, vocab, pairs, grads);
    }
    std::vector<ListExample> lists;
    for (const auto& ex : batch) lists.push_back(std::get<ListExample>(ex));
    return batch_loss_infonce(model, vocab, lists, tau, grads);
}

} // namespace minirank
