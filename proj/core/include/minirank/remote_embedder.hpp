#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace minirank {

/// Client for an embeddings-API-shaped HTTP service:
/// POST /v1/embeddings {"model": ..., "input": [...]} ->
/// {"data": [{"index": i, "embedding": [...]}]}.
struct RemoteEmbedderConfig {
    std::string base_url;             // e.g. "http://127.0.0.1:8080"
    std::string model_name;
    std::string api_key_env;          // env var holding the bearer token; may be empty
    int batch_size = 64;
    int timeout_seconds = 30;
    int max_retries = 3;
};

/// Order-preserving batched embedding. Vectors are re-normalized to unit
/// length. Throws after max_retries failed attempts (message carries the
/// attempt count) and on dimension mismatches within a batch.
std::vector<Eigen::VectorXd> remote_embed(const RemoteEmbedderConfig& cfg,
                                          const std::vector<std::string>& texts);

} // namespace minirank
