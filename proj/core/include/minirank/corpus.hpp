#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace minirank {

struct Passage {
    std::string id;
    std::string title;  // may be empty
    std::string text;

    bool operator==(const Passage&) const = default;
};

struct Query {
    std::string id;
    std::string text;

    bool operator==(const Query&) const = default;
};

struct Qrels {
    // query-id -> passage-id -> relevance grade
    std::map<std::string, std::map<std::string, int>> judgments;
    // duplicate (query, passage) rows resolved last-wins; count kept for diagnostics
    int duplicate_count = 0;

    bool operator==(const Qrels& o) const { return judgments == o.judgments; }
};

struct Dataset {
    std::string name;
    std::vector<Passage> passages;
    std::vector<Query> queries;
    Qrels qrels;
};

/// Loads a BEIR corpus.jsonl file (one object per line: _id, title, text).
/// Throws on malformed lines (with line number) and duplicate ids.
std::vector<Passage> load_corpus(const std::string& path);

/// Loads a BEIR queries.jsonl file (_id, text).
std::vector<Query> load_queries(const std::string& path);

/// Loads a BEIR qrels TSV (header row: query-id, corpus-id, score).
Qrels load_qrels(const std::string& path);

void save_corpus(const std::vector<Passage>& passages, const std::string& path);
void save_queries(const std::vector<Query>& queries, const std::string& path);
void save_qrels(const Qrels& qrels, const std::string& path);

/// Persists a dataset in BEIR layout under dir: corpus.jsonl, queries.jsonl,
/// qrels/test.tsv.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir, const std::string& name = "");

/// Validates bundle invariants. Returns a list of human-readable violations
/// (all of them, not just the first); empty means valid.
std::vector<std::string> validate_dataset(const Dataset& ds);

/// Deterministic synthetic Q&A dataset. Each query has exactly one grade-1
/// positive passage built by lexical overlap, plus distractors sharing some
/// vocabulary.
Dataset make_synthetic_dataset(uint64_t seed, int n_queries, int n_passages,
                               const std::vector<std::string>& vocab = {});

/// Default word list used by make_synthetic_dataset when none is given.
std::vector<std::string> default_synthetic_vocab();

} // namespace minirank
