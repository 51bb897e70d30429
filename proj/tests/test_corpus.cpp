#include <doctest.h>

#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>

#include "minirank/corpus.hpp"

using namespace minirank;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("minirank_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("load_corpus maps jsonl fields") {
    TempDir dir;
    write_file(dir.file("c.jsonl"), "{\"_id\":\"d1\",\"title\":\"T\",\"text\":\"hello\"}\n");
    auto passages = load_corpus(dir.file("c.jsonl"));
    REQUIRE(passages.size() == 1);
    CHECK(passages[0] == Passage{"d1", "T", "hello"});
}

TEST_CASE("load_corpus on empty file yields empty sequence") {
    TempDir dir;
    write_file(dir.file("c.jsonl"), "");
    CHECK(load_corpus(dir.file("c.jsonl")).empty());
}

TEST_CASE("load_corpus rejects duplicate ids") {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               "{\"_id\":\"d1\",\"text\":\"a\"}\n{\"_id\":\"d1\",\"text\":\"b\"}\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl")),
                         doctest::Contains("d1"), std::runtime_error);
}

TEST_CASE("load_corpus reports line numbers for malformed lines") {
    TempDir dir;
    write_file(dir.file("c.jsonl"), "{\"_id\":\"d1\",\"text\":\"a\"}\nnot json\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl")), doctest::Contains(":2"),
                         std::runtime_error);
}

TEST_CASE("load_queries maps fields and rejects missing text") {
    TempDir dir;
    write_file(dir.file("q.jsonl"), "{\"_id\":\"q1\",\"text\":\"who?\"}\n");
    auto queries = load_queries(dir.file("q.jsonl"));
    REQUIRE(queries.size() == 1);
    CHECK(queries[0] == Query{"q1", "who?"});

    write_file(dir.file("bad.jsonl"), "{\"_id\":\"q1\"}\n");
    CHECK_THROWS_WITH_AS(load_queries(dir.file("bad.jsonl")), doctest::Contains(":1"),
                         std::runtime_error);
}

TEST_CASE("load_qrels parses rows, header-only files, and last-wins duplicates") {
    TempDir dir;
    write_file(dir.file("t.tsv"), "query-id\tcorpus-id\tscore\nq1\td1\t1\n");
    Qrels qrels = load_qrels(dir.file("t.tsv"));
    CHECK(qrels.judgments.at("q1").at("d1") == 1);
    CHECK(qrels.duplicate_count == 0);

    write_file(dir.file("h.tsv"), "query-id\tcorpus-id\tscore\n");
    CHECK(load_qrels(dir.file("h.tsv")).judgments.empty());

    write_file(dir.file("d.tsv"), "query-id\tcorpus-id\tscore\nq1\td1\t1\nq1\td1\t2\n");
    Qrels dup = load_qrels(dir.file("d.tsv"));
    CHECK(dup.judgments.at("q1").at("d1") == 2);
    CHECK(dup.duplicate_count == 1);
}

TEST_CASE("load_qrels rejects non-integer scores") {
    TempDir dir;
    write_file(dir.file("t.tsv"), "query-id\tcorpus-id\tscore\nq1\td1\tx\n");
    CHECK_THROWS_AS(load_qrels(dir.file("t.tsv")), std::runtime_error);
}

TEST_CASE("dataset save/load round-trips") {
    TempDir dir;
    Dataset ds = make_synthetic_dataset(3, 5, 20);
    ds.name = "toy";
    save_dataset(ds, dir.path.string());
    Dataset back = load_dataset(dir.path.string(), "toy");
    CHECK(back.passages == ds.passages);
    CHECK(back.queries == ds.queries);
    CHECK(back.qrels == ds.qrels);
}

TEST_CASE("synthetic dataset is deterministic per seed") {
    TempDir a, b;
    save_dataset(make_synthetic_dataset(7, 10, 40), a.path.string());
    save_dataset(make_synthetic_dataset(7, 10, 40), b.path.string());
    CHECK(read_file(a.file("corpus.jsonl")) == read_file(b.file("corpus.jsonl")));
    CHECK(read_file(a.file("queries.jsonl")) == read_file(b.file("queries.jsonl")));
    CHECK(read_file((a.path / "qrels" / "test.tsv").string()) ==
          read_file((b.path / "qrels" / "test.tsv").string()));

    Dataset other = make_synthetic_dataset(8, 10, 40);
    Dataset base = make_synthetic_dataset(7, 10, 40);
    CHECK(other.passages != base.passages);
}

TEST_CASE("minimal synthetic dataset has one grade-1 judgment") {
    Dataset ds = make_synthetic_dataset(1, 1, 1);
    REQUIRE(ds.qrels.judgments.size() == 1);
    REQUIRE(ds.qrels.judgments.begin()->second.size() == 1);
    CHECK(ds.qrels.judgments.begin()->second.begin()->second == 1);
}

TEST_CASE("synthetic datasets validate across seeds") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Dataset ds = make_synthetic_dataset(seed, 8, 30);
        auto violations = validate_dataset(ds);
        CAPTURE(seed);
        CHECK(violations.empty());
    }
}

TEST_CASE("validate_dataset reports all violations, not just the first") {
    Dataset ds = make_synthetic_dataset(1, 3, 10);
    ds.qrels.judgments["missing-query"]["d0"] = 1;
    ds.qrels.judgments[ds.queries[0].id]["missing-passage"] = 1;
    auto violations = validate_dataset(ds);
    CHECK(violations.size() >= 2);
}
