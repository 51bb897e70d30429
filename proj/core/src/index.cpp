#include "minirank/index.hpp"

#include "minirank/util.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace minirank {

namespace {

constexpr uint32_t kMagic = 0x4d524958u;  // "MRIX"
constexpr uint32_t kVersion = 1;
constexpr int kKmeansIterations = 20;

// Matrix values are quantized to 32-bit floats at build time so the on-disk
// float32 representation round-trips losslessly.
double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void write_f32(std::ostream& os, double v) {
    float f = static_cast<float>(v);
    os.write(reinterpret_cast<const char*>(&f), sizeof(f));
}

double read_f32(std::istream& is) {
    float f;
    is.read(reinterpret_cast<char*>(&f), sizeof(f));
    if (!is) throw std::runtime_error("unexpected end of index file");
    return static_cast<double>(f);
}

std::vector<std::pair<std::string, double>> top_k_rows(
    const VectorIndex& index, const Eigen::VectorXd& scores,
    const std::vector<int>& rows, int k) {
    std::vector<int> order(rows);
    auto cmp = [&](int a, int b) {
        double sa = scores(a), sb = scores(b);
        if (sa != sb) return sa > sb;
        return index.ids()[static_cast<size_t>(a)] < index.ids()[static_cast<size_t>(b)];
    };
    size_t kk = std::min<size_t>(static_cast<size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(kk), order.end(), cmp);
    std::vector<std::pair<std::string, double>> hits;
    hits.reserve(kk);
    for (size_t i = 0; i < kk; ++i)
        hits.emplace_back(index.ids()[static_cast<size_t>(order[i])], scores(order[i]));
    return hits;
}

} // namespace

VectorIndex::VectorIndex(std::vector<std::string> ids, Eigen::MatrixXd matrix,
                         uint64_t embedder_fingerprint)
    : ids_(std::move(ids)),
      matrix_(std::move(matrix)),
      embedder_fingerprint_(embedder_fingerprint) {
    if (static_cast<long>(ids_.size()) != matrix_.rows())
        throw std::invalid_argument("id count does not match row count");
}

VectorIndex build_index(const std::vector<std::string>& ids,
                        const std::vector<Eigen::VectorXd>& embeddings,
                        uint64_t embedder_fingerprint) {
    if (ids.size() != embeddings.size())
        throw std::invalid_argument("id count does not match embedding count");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids)
        if (!seen.insert(id).second)
            throw std::invalid_argument("duplicate passage id '" + id + "'");

    long d = embeddings.empty() ? 0 : embeddings[0].size();
    Eigen::MatrixXd m(static_cast<long>(ids.size()), d);
    for (size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].size() != d)
            throw std::invalid_argument("embedding dimension mismatch at row " +
                                        std::to_string(i));
        if (std::abs(embeddings[i].norm() - 1.0) > 1e-5)
            throw std::invalid_argument("embedding at row " + std::to_string(i) +
                                        " is not unit-norm");
        for (long j = 0; j < d; ++j) m(static_cast<long>(i), j) = to_f32(embeddings[i](j));
    }
    return VectorIndex(ids, std::move(m), embedder_fingerprint);
}

SearchResult search_exact(const VectorIndex& index, const Eigen::VectorXd& query_vec, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    SearchResult result;
    if (index.size() == 0) return result;
    if (query_vec.size() != index.dim())
        throw std::invalid_argument("query dimension mismatch");
    Eigen::VectorXd scores = index.matrix() * query_vec;
    std::vector<int> all(static_cast<size_t>(index.size()));
    for (int i = 0; i < index.size(); ++i) all[static_cast<size_t>(i)] = i;
    result.hits = top_k_rows(index, scores, all, k);
    return result;
}

void build_clusters(VectorIndex& index, int n_lists, uint64_t seed) {
    const int n = index.size();
    if (n_lists < 1 || n_lists > n)
        throw std::invalid_argument("n_lists must be in [1, n]");
    const Eigen::MatrixXd& m = index.matrix();

    Rng rng(seed);
    // init centroids by sampling distinct rows
    std::set<int> init;
    while (static_cast<int>(init.size()) < n_lists)
        init.insert(static_cast<int>(rng.next_below(static_cast<uint64_t>(n))));
    Eigen::MatrixXd centroids(n_lists, index.dim());
    int r = 0;
    for (int row : init) centroids.row(r++) = m.row(row);

    std::vector<int> assign(static_cast<size_t>(n), 0);
    for (int iter = 0; iter < kKmeansIterations; ++iter) {
        // assign by max inner product
        Eigen::MatrixXd sims = m * centroids.transpose();  // [n x n_lists]
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int c = 1; c < n_lists; ++c)
                if (sims(i, c) > sims(i, best)) best = c;
            assign[static_cast<size_t>(i)] = best;
        }
        // recompute centroids (spherical: mean then renormalize)
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_lists, index.dim());
        std::vector<int> counts(static_cast<size_t>(n_lists), 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[static_cast<size_t>(i)]) += m.row(i);
            ++counts[static_cast<size_t>(assign[static_cast<size_t>(i)])];
        }
        for (int c = 0; c < n_lists; ++c) {
            if (counts[static_cast<size_t>(c)] == 0) continue;  // keep previous centroid
            double norm = sums.row(c).norm();
            if (norm > 0) centroids.row(c) = sums.row(c) / norm;
        }
    }

    Clustering cl;
    cl.seed = seed;
    cl.centroids.resize(n_lists, index.dim());
    for (int c = 0; c < n_lists; ++c)
        for (int j = 0; j < index.dim(); ++j) cl.centroids(c, j) = to_f32(centroids(c, j));
    cl.members.resize(static_cast<size_t>(n_lists));
    for (int i = 0; i < n; ++i)
        cl.members[static_cast<size_t>(assign[static_cast<size_t>(i)])].push_back(i);
    index.set_clustering(std::move(cl));
}

SearchResult search_ann(const VectorIndex& index, const Eigen::VectorXd& query_vec,
                        int k, int n_probe) {
    if (!index.clustering())
        throw std::runtime_error("clusters not built; call build_clusters first");
    const Clustering& cl = *index.clustering();
    const int n_lists = static_cast<int>(cl.centroids.rows());
    if (n_probe < 1 || n_probe > n_lists)
        throw std::invalid_argument("n_probe must be in [1, n_lists]");

    Eigen::VectorXd csims = cl.centroids * query_vec;
    std::vector<int> order(static_cast<size_t>(n_lists));
    for (int i = 0; i < n_lists; ++i) order[static_cast<size_t>(i)] = i;
    std::partial_sort(order.begin(), order.begin() + n_probe, order.end(),
                      [&](int a, int b) {
                          if (csims(a) != csims(b)) return csims(a) > csims(b);
                          return a < b;
                      });

    std::vector<int> scanned;
    for (int p = 0; p < n_probe; ++p)
        for (int row : cl.members[static_cast<size_t>(order[static_cast<size_t>(p)])])
            scanned.push_back(row);

    SearchResult result;
    if (scanned.empty()) return result;
    Eigen::VectorXd scores = index.matrix() * query_vec;
    result.hits = top_k_rows(index, scores, scanned, k);
    return result;
}

void save_index(const VectorIndex& index, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write index: " + path);
    io::write_u32(os, kMagic);
    io::write_u32(os, kVersion);
    io::write_u64(os, index.embedder_fingerprint());
    io::write_u64(os, static_cast<uint64_t>(index.dim()));
    io::write_u64(os, static_cast<uint64_t>(index.size()));
    for (const auto& id : index.ids()) io::write_string(os, id);
    for (int i = 0; i < index.size(); ++i)
        for (int j = 0; j < index.dim(); ++j) write_f32(os, index.matrix()(i, j));
    if (index.clustering()) {
        const Clustering& cl = *index.clustering();
        io::write_u32(os, 1);
        io::write_u64(os, static_cast<uint64_t>(cl.centroids.rows()));
        io::write_u64(os, cl.seed);
        for (long c = 0; c < cl.centroids.rows(); ++c)
            for (long j = 0; j < cl.centroids.cols(); ++j) write_f32(os, cl.centroids(c, j));
        for (const auto& list : cl.members) {
            io::write_u64(os, list.size());
            for (int row : list) io::write_u32(os, static_cast<uint32_t>(row));
        }
    } else {
        io::write_u32(os, 0);
    }
    if (!os) throw std::runtime_error("failed writing index: " + path);
}

VectorIndex load_index(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open index: " + path);
    if (io::read_u32(is) != kMagic) throw std::runtime_error("bad index magic: " + path);
    if (io::read_u32(is) != kVersion)
        throw std::runtime_error("unsupported index version: " + path);
    uint64_t fingerprint = io::read_u64(is);
    long d = static_cast<long>(io::read_u64(is));
    long n = static_cast<long>(io::read_u64(is));
    std::vector<std::string> ids;
    ids.reserve(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) ids.push_back(io::read_string(is));
    Eigen::MatrixXd m(n, d);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < d; ++j) m(i, j) = read_f32(is);
    VectorIndex index(std::move(ids), std::move(m), fingerprint);
    if (io::read_u32(is) == 1) {
        Clustering cl;
        long n_lists = static_cast<long>(io::read_u64(is));
        cl.seed = io::read_u64(is);
        cl.centroids.resize(n_lists, d);
        for (long c = 0; c < n_lists; ++c)
            for (long j = 0; j < d; ++j) cl.centroids(c, j) = read_f32(is);
        cl.members.resize(static_cast<size_t>(n_lists));
        for (auto& list : cl.members) {
            uint64_t sz = io::read_u64(is);
            list.resize(sz);
            for (auto& row : list) row = static_cast<int>(io::read_u32(is));
        }
        index.set_clustering(std::move(cl));
    }
    return index;
}

} // namespace minirank
