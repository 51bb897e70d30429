#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "minirank/index.hpp"
#include "minirank/util.hpp"

using namespace minirank;

namespace {

Eigen::VectorXd random_unit(Rng& rng, int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.next_normal();
    return v.normalized();
}

VectorIndex random_index(Rng& rng, int n, int d) {
    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> vecs;
    for (int i = 0; i < n; ++i) {
        ids.push_back("v" + std::to_string(i));
        vecs.push_back(random_unit(rng, d));
    }
    return build_index(ids, vecs);
}

// independent reference: full sort by (score desc, id asc)
std::vector<std::pair<std::string, double>> full_sort(const VectorIndex& index,
                                                      const Eigen::VectorXd& q, int k) {
    std::vector<std::pair<std::string, double>> all;
    for (int i = 0; i < index.size(); ++i)
        all.emplace_back(index.ids()[static_cast<size_t>(i)], index.matrix().row(i).dot(q));
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(all.size()) > k) all.resize(static_cast<size_t>(k));
    return all;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("minirank_index_" + name)).string();
}

} // namespace

TEST_CASE("empty index searches to empty results") {
    VectorIndex index = build_index({}, {});
    CHECK(index.size() == 0);
    CHECK(search_exact(index, Eigen::VectorXd::Zero(4), 5).hits.empty());
}

TEST_CASE("duplicate ids are rejected by name") {
    Rng rng(1);
    std::vector<Eigen::VectorXd> vecs{random_unit(rng, 4), random_unit(rng, 4)};
    CHECK_THROWS_WITH_AS(build_index({"a", "a"}, vecs), doctest::Contains("a"),
                         std::invalid_argument);
}

TEST_CASE("non-unit vectors are rejected") {
    CHECK_THROWS_AS(build_index({"a"}, {Eigen::VectorXd::Constant(4, 2.0)}),
                    std::invalid_argument);
}

TEST_CASE("index build and serialization are deterministic") {
    Rng rng1(2), rng2(2);
    VectorIndex a = random_index(rng1, 20, 6);
    VectorIndex b = random_index(rng2, 20, 6);
    std::string pa = temp_path("a.bin"), pb = temp_path("b.bin");
    save_index(a, pa);
    save_index(b, pb);
    CHECK(read_file(pa) == read_file(pb));
    std::remove(pa.c_str());
    std::remove(pb.c_str());
}

TEST_CASE("searching the only vector scores 1.0") {
    Rng rng(3);
    Eigen::VectorXd v = random_unit(rng, 8);
    VectorIndex index = build_index({"only"}, {v});
    SearchResult r = search_exact(index, v, 1);
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0].first == "only");
    CHECK(r.hits[0].second == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("search_exact with k = n matches the full-sort reference") {
    Rng rng(4);
    VectorIndex index = random_index(rng, 50, 6);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd q = random_unit(rng, 6);
        SearchResult r = search_exact(index, q, 50);
        auto expected = full_sort(index, q, 50);
        REQUIRE(r.hits.size() == expected.size());
        for (size_t i = 0; i < expected.size(); ++i) {
            CHECK(r.hits[i].first == expected[i].first);
            CHECK(r.hits[i].second == expected[i].second);
        }
    }
    // k > n returns all n
    CHECK(search_exact(index, random_unit(rng, 6), 99).hits.size() == 50);
}

TEST_CASE("orthogonal query scores zero with id-ascending order") {
    // rows live in the first two dimensions; query in the third
    std::vector<std::string> ids{"b", "a", "c"};
    std::vector<Eigen::VectorXd> vecs;
    for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
        v(i % 2) = 1.0;
        vecs.push_back(v);
    }
    VectorIndex index = build_index(ids, vecs);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
    q(2) = 1.0;
    SearchResult r = search_exact(index, q, 3);
    REQUIRE(r.hits.size() == 3);
    CHECK(r.hits[0].first == "a");
    CHECK(r.hits[1].first == "b");
    CHECK(r.hits[2].first == "c");
    for (const auto& [id, score] : r.hits) CHECK(score == doctest::Approx(0.0));
}

TEST_CASE("ANN with n_probe = n_lists equals exact search") {
    Rng rng(5);
    VectorIndex index = random_index(rng, 200, 8);
    build_clusters(index, 8, 77);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd q = random_unit(rng, 8);
        SearchResult exact = search_exact(index, q, 10);
        SearchResult ann = search_ann(index, q, 10, 8);
        REQUIRE(ann.hits.size() == exact.hits.size());
        for (size_t i = 0; i < exact.hits.size(); ++i) {
            CHECK(ann.hits[i].first == exact.hits[i].first);
            CHECK(ann.hits[i].second == exact.hits[i].second);
        }
    }
}

TEST_CASE("ANN with a single list equals exact search; out-of-range n_probe rejected") {
    Rng rng(6);
    VectorIndex index = random_index(rng, 100, 6);
    build_clusters(index, 1, 78);
    Eigen::VectorXd q = random_unit(rng, 6);
    SearchResult exact = search_exact(index, q, 10);
    SearchResult ann = search_ann(index, q, 10, 1);
    REQUIRE(ann.hits.size() == exact.hits.size());
    for (size_t i = 0; i < exact.hits.size(); ++i)
        CHECK(ann.hits[i].first == exact.hits[i].first);
    CHECK_THROWS_AS(search_ann(index, q, 10, 3), std::invalid_argument);
}

TEST_CASE("index save/load round-trips and preserves search results") {
    Rng rng(7);
    VectorIndex index = random_index(rng, 60, 6);
    build_clusters(index, 4, 79);
    std::string path = temp_path("rt.bin");
    save_index(index, path);
    VectorIndex back = load_index(path);
    CHECK(back.ids() == index.ids());
    CHECK(back.matrix() == index.matrix());
    REQUIRE(back.clustering().has_value());
    CHECK(back.clustering()->centroids == index.clustering()->centroids);
    CHECK(back.clustering()->members == index.clustering()->members);

    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd q = random_unit(rng, 6);
        SearchResult before = search_exact(index, q, 10);
        SearchResult after = search_exact(back, q, 10);
        REQUIRE(before.hits.size() == after.hits.size());
        for (size_t i = 0; i < before.hits.size(); ++i) {
            CHECK(before.hits[i].first == after.hits[i].first);
            CHECK(before.hits[i].second == after.hits[i].second);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("corrupted magic bytes are rejected") {
    Rng rng(8);
    VectorIndex index = random_index(rng, 5, 4);
    std::string path = temp_path("bad.bin");
    save_index(index, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_index(path), std::runtime_error);
    std::remove(path.c_str());
}
