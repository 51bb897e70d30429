#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "minirank/tokenizer.hpp"

namespace minirank {

enum class AttentionMode { kCausal, kBidirectional };

std::string to_string(AttentionMode mode);
AttentionMode attention_mode_from_string(const std::string& s);

struct ModelConfig {
    int vocab_size = 0;
    int d_model = 0;
    int n_heads = 1;
    int n_layers = 1;
    int d_ff = 0;
    int max_seq_len = 4;
    AttentionMode attention_mode = AttentionMode::kBidirectional;
    uint64_t seed = 0;

    int head_dim() const { return d_model / n_heads; }
    void validate() const;  // throws std::invalid_argument on violations
    bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
    Eigen::MatrixXd wq, wk, wv, wo;  // [d_model x d_model]
    Eigen::MatrixXd w1;              // [d_model x d_ff]
    Eigen::VectorXd b1;              // [d_ff]
    Eigen::MatrixXd w2;              // [d_ff x d_model]
    Eigen::VectorXd b2;              // [d_model]
    Eigen::VectorXd norm1_gain, norm2_gain;  // [d_model]
};

struct ParameterSet {
    Eigen::MatrixXd token_embedding;  // [vocab_size x d_model]
    Eigen::MatrixXd pos_embedding;    // [max_seq_len x d_model]
    std::vector<LayerParams> layers;
    Eigen::VectorXd final_norm_gain;  // [d_model]
};

// Named view over every tensor in a ParameterSet, in a fixed order.
struct TensorRef {
    std::string name;
    double* data;
    long rows;
    long cols;  // 1 for vectors
    long size() const { return rows * cols; }
};
std::vector<TensorRef> tensor_refs(ParameterSet& params);
std::vector<TensorRef> tensor_refs(const ParameterSet& params);

ParameterSet init_params(const ModelConfig& config);
ParameterSet zeros_like(const ParameterSet& params);

std::vector<double> flatten(const ParameterSet& params);
void unflatten(const std::vector<double>& flat, ParameterSet& params);
long num_params(const ParameterSet& params);

/// grads += scale * other (shapes must match)
void axpy(ParameterSet& acc, const ParameterSet& other, double scale);
void scale_params(ParameterSet& params, double s);

struct ForwardTrace;

struct ForwardResult {
    Eigen::MatrixXd hidden;  // [seq x d_model], post final-norm
    Eigen::VectorXd pooled;  // [d_model], mean over kept positions
    std::shared_ptr<ForwardTrace> trace;  // set only in training mode
};

/// Pre-norm transformer forward pass. Padding positions are masked out of
/// attention; causal mode additionally masks future positions. Pooling is
/// the mean of final hidden states over kept positions.
ForwardResult forward(const ParameterSet& params, const ModelConfig& config,
                      const TokenSeq& tokens, bool training = false);

/// Hidden states after each layer (and before the final norm), for
/// equivalence checks against pruned models. Requires a training-mode trace.
const std::vector<Eigen::MatrixXd>& layer_outputs(const ForwardTrace& trace);

/// Exact gradients of (upstream_pooled_grad . pooled) w.r.t. every parameter.
ParameterSet backward(const ForwardTrace& trace, const ParameterSet& params,
                      const ModelConfig& config, const Eigen::VectorXd& pooled_grad);

/// Keeps the bottom (input-side) k layers plus embeddings and final norm.
std::pair<ParameterSet, ModelConfig> prune_bottom_layers(const ParameterSet& params,
                                                         const ModelConfig& config, int k);

} // namespace minirank
