#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "minirank/checkpoint.hpp"
#include "minirank/corpus.hpp"
#include "minirank/mining_types.hpp"
#include "minirank/tokenizer.hpp"
#include "minirank/trainer.hpp"
#include "minirank/transformer.hpp"

namespace minirank {

/// Bi-encoder: shared backbone, mean pooling, linear projection, unit
/// normalization. Query and passage share the same encoder; optional
/// asymmetric prefixes are off by default.
struct EmbedderModel {
    ParameterSet backbone;
    ModelConfig config;
    Eigen::MatrixXd projection;  // [d_model x d_embed]
    std::string query_prefix;    // prepended to queries when non-empty
    std::string passage_prefix;

    int d_embed() const { return static_cast<int>(projection.cols()); }
};

EmbedderModel init_embedder(const ModelConfig& config, int d_embed);

/// Mean-pooled backbone output, projected and L2-normalized. A zero
/// projection output yields the zero vector rather than dividing by zero.
Eigen::VectorXd embed(const EmbedderModel& model, const Vocab& vocab,
                      const std::string& text);

Eigen::VectorXd embed_query(const EmbedderModel& model, const Vocab& vocab,
                            const std::string& text);
Eigen::VectorXd embed_passage(const EmbedderModel& model, const Vocab& vocab,
                              const std::string& text);

/// InfoNCE over scaled cosine scores with in-batch negatives plus any mined
/// hard negatives; deterministic for a fixed seed.
EmbedderModel train_biencoder(const Dataset& dataset, const std::vector<MinedExample>& mined,
                              const Vocab& vocab, const ModelConfig& model_config,
                              int d_embed, const TrainConfig& train_config,
                              const std::function<void(int, double)>& on_step = {});

void save_embedder(const EmbedderModel& model, const std::string& path);
EmbedderModel load_embedder(const std::string& path);
uint64_t embedder_fingerprint(const EmbedderModel& model);

} // namespace minirank
