#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "minirank/checkpoint.hpp"
#include "minirank/tokenizer.hpp"
#include "minirank/transformer.hpp"

namespace minirank {

/// Cross-encoder reranker: pair input -> backbone -> mean pooling -> single
/// scoring unit producing a relevance logit.
struct RerankerModel {
    ParameterSet backbone;
    ModelConfig config;
    Eigen::VectorXd head_weight;  // [d_model]
    double head_bias = 0.0;
};

RerankerModel init_reranker(const ModelConfig& config);

struct ScoredPassage {
    std::string passage_id;
    double logit = 0.0;
    int rank = 0;  // 1-based
};

double score(const RerankerModel& model, const Vocab& vocab, const std::string& query,
             const std::string& passage);

std::vector<double> score_batch(const RerankerModel& model, const Vocab& vocab,
                                const std::string& query,
                                const std::vector<std::string>& passages);

/// Sorts candidates by logit descending (ties by passage_id ascending) and
/// truncates to top_n.
std::vector<ScoredPassage> rerank(const RerankerModel& model, const Vocab& vocab,
                                  const std::string& query,
                                  const std::vector<std::pair<std::string, std::string>>& candidates,
                                  int top_n);

void save_reranker(const RerankerModel& model, const std::string& path);
RerankerModel load_reranker(const std::string& path);
uint64_t reranker_fingerprint(const RerankerModel& model);

} // namespace minirank
