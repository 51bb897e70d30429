#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "minirank/corpus.hpp"
#include "minirank/losses.hpp"
#include "minirank/mining_types.hpp"

namespace minirank {

enum class LossKind { kBce, kInfoNce };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

struct TrainConfig {
    LossKind loss = LossKind::kInfoNce;
    double tau = 0.05;
    int n_negatives = 4;
    // extra random corpus negatives appended per example so the model also
    // sees pairs outside the teacher's top-k
    int n_random_negatives = 2;
    double learning_rate = 1e-2;
    int steps = 200;
    int batch_size = 8;
    double weight_decay = 0.0;
    double warmup_fraction = 0.1;
    uint64_t seed = 0;
};

/// Adam with decoupled weight decay and warmup + linear-decay schedule,
/// operating on a flat parameter vector.
class AdamOptimizer {
public:
    AdamOptimizer(size_t n_params, double lr, double weight_decay, int total_steps,
                  double warmup_fraction, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void step(std::vector<double>& params, const std::vector<double>& grads);
    double current_lr() const;

private:
    double base_lr_, weight_decay_, beta1_, beta2_, eps_;
    int total_steps_, warmup_steps_;
    int t_ = 0;
    std::vector<double> m_, v_;
};

/// Trains a cross-encoder reranker on mined (query, positive, negatives)
/// lists from the dataset. Deterministic for a fixed seed.
/// Optional per-step callback receives (step, mean loss).
RerankerModel train_reranker(const Dataset& dataset, const std::vector<MinedExample>& mined,
                             const Vocab& vocab, const ModelConfig& model_config,
                             const TrainConfig& train_config,
                             const std::function<void(int, double)>& on_step = {});

} // namespace minirank
