#pragma once

#include <variant>
#include <vector>

#include "minirank/crossencoder.hpp"

namespace minirank {

struct PairExample {
    std::string query;
    std::string passage;
    int label = 0;  // 0 or 1
};

struct ListExample {
    std::string query;
    std::string positive;
    std::vector<std::string> negatives;  // at least one
};

using Example = std::variant<PairExample, ListExample>;

/// Point-wise binary cross-entropy on a raw logit. Returns (loss, dloss/dlogit).
/// Stable in log-sum-exp form for |logit| up to ~700.
std::pair<double, double> bce_loss(double logit, int label);

struct InfoNceResult {
    double loss = 0.0;
    double pos_grad = 0.0;             // dloss/dpos_logit
    std::vector<double> neg_grads;     // dloss/dneg_logit[i]
};

/// List-wise InfoNCE over temperature-scaled logits, max-shifted log-sum-exp.
InfoNceResult infonce_loss(double pos_logit, const std::vector<double>& neg_logits,
                           double tau);

struct RerankerGradients {
    ParameterSet backbone;
    Eigen::VectorXd head_weight;
    double head_bias = 0.0;
};

RerankerGradients zero_gradients(const RerankerModel& model);

/// Scores one pair in training mode and accumulates d(upstream * logit) into
/// grads. Returns the logit.
double score_with_grad(const RerankerModel& model, const Vocab& vocab,
                       const std::string& query, const std::string& passage,
                       double upstream, RerankerGradients& grads);

/// Mean loss over a homogeneous batch, backpropagated through score() into
/// backbone and head. Throws if pair and list examples are mixed.
double batch_loss(const RerankerModel& model, const Vocab& vocab,
                  const std::vector<Example>& batch, double tau,
                  RerankerGradients* grads = nullptr);

double batch_loss_bce(const RerankerModel& model, const Vocab& vocab,
                      const std::vector<PairExample>& batch,
                      RerankerGradients* grads = nullptr);

double batch_loss_infonce(const RerankerModel& model, const Vocab& vocab,
                          const std::vector<ListExample>& batch, double tau,
                          RerankerGradients* grads = nullptr);

} // namespace minirank
