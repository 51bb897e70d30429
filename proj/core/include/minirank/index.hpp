#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace minirank {

struct SearchResult {
    std::vector<std::pair<std::string, double>> hits;  // (passage_id, score), descending
};

struct Clustering {
    Eigen::MatrixXd centroids;               // [n_lists x d]
    std::vector<std::vector<int>> members;   // row indices per list
    uint64_t seed = 0;
};

/// Immutable id-addressed store of unit-norm embeddings with exact MIPS
/// top-k and an opt-in clustered (IVF-style) approximate search.
class VectorIndex {
public:
    VectorIndex() = default;
    VectorIndex(std::vector<std::string> ids, Eigen::MatrixXd matrix,
                uint64_t embedder_fingerprint = 0);

    int size() const { return static_cast<int>(ids_.size()); }
    int dim() const { return static_cast<int>(matrix_.cols()); }
    const std::vector<std::string>& ids() const { return ids_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    uint64_t embedder_fingerprint() const { return embedder_fingerprint_; }
    const std::optional<Clustering>& clustering() const { return clustering_; }

    void set_clustering(Clustering c) { clustering_ = std::move(c); }

private:
    std::vector<std::string> ids_;
    Eigen::MatrixXd matrix_;  // [n x d], unit rows
    uint64_t embedder_fingerprint_ = 0;
    std::optional<Clustering> clustering_;
};

VectorIndex build_index(const std::vector<std::string>& ids,
                        const std::vector<Eigen::VectorXd>& embeddings,
                        uint64_t embedder_fingerprint = 0);

/// Exact top-k by inner product; ties break by passage_id ascending.
/// k > n returns all n.
SearchResult search_exact(const VectorIndex& index, const Eigen::VectorXd& query_vec, int k);

/// Seeded k-means clustering (fixed 20 iterations) for approximate search.
void build_clusters(VectorIndex& index, int n_lists, uint64_t seed);

/// Scans only the n_probe nearest centroids' lists; exact ordering within
/// the scanned set, true inner products as scores.
SearchResult search_ann(const VectorIndex& index, const Eigen::VectorXd& query_vec,
                        int k, int n_probe);

void save_index(const VectorIndex& index, const std::string& path);
VectorIndex load_index(const std::string& path);

} // namespace minirank
