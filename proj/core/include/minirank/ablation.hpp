#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "minirank/corpus.hpp"
#include "minirank/mining.hpp"
#include "minirank/pipeline.hpp"
#include "minirank/trainer.hpp"

namespace minirank {

struct AblationSize {
    std::string label;
    int d_model = 16;
    int n_heads = 2;
    int n_layers = 1;
    int d_ff = 32;
};

struct AblationGrid {
    std::vector<AblationSize> sizes;
    std::vector<AttentionMode> attention_modes;
    std::vector<LossKind> losses;
    std::vector<uint64_t> seeds;
};

struct AblationCell {
    std::string size_label;
    AttentionMode attention = AttentionMode::kBidirectional;
    LossKind loss = LossKind::kInfoNce;
    std::vector<double> per_seed_ndcg;
    double mean_ndcg = 0.0;

    std::string label() const;
};

struct AblationReport {
    std::vector<double> baseline_per_seed;  // retriever-only NDCG@10, one per seed
    double baseline_mean = 0.0;
    std::vector<AblationCell> cells;
    int k = 10;

    /// Mean over cells matching a predicate; used for marginal comparisons.
    double marginal_mean(const std::function<bool(const AblationCell&)>& pred) const;
};

struct AblationSetup {
    // teacher bi-encoder (retriever + mining teacher)
    ModelConfig teacher_config;
    int teacher_d_embed = 16;
    TrainConfig teacher_train;
    MiningConfig mining;
    // shared reranker budget; loss/seed/attention/size come from the grid
    TrainConfig reranker_train;
    int reranker_max_seq_len = 48;
    PipelineConfig pipeline;  // evaluation pipeline (k_retrieve, k_rerank, final_k)
    int eval_k = 10;
};

/// Trains and evaluates the full size x attention x loss grid with a shared
/// per-seed train set (same mined negatives) and the same step budget.
AblationReport run_ablation(const Dataset& dataset, const Vocab& vocab,
                            const AblationGrid& grid, const AblationSetup& setup,
                            const std::function<void(const std::string&)>& log = {});

std::string render_ablation_text(const AblationReport& report);
std::string render_ablation_json(const AblationReport& report);

} // namespace minirank
