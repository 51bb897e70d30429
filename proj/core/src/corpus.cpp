#include "minirank/corpus.hpp"
#include "minirank/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace minirank {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Reads a file line by line, splitting on \n and tolerating trailing \r.
std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

json parse_line(const std::string& line, size_t lineno, const std::string& path) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed JSON line: " + e.what());
    }
}

std::string require_string(const json& j, const char* field, size_t lineno,
                           const std::string& path) {
    if (!j.contains(field) || !j.at(field).is_string())
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": missing or non-string field '" + field + "'");
    return j.at(field).get<std::string>();
}

} // namespace

std::vector<Passage> load_corpus(const std::string& path) {
    std::vector<Passage> out;
    std::unordered_set<std::string> seen;
    size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j = parse_line(line, lineno, path);
        Passage p;
        p.id = require_string(j, "_id", lineno, path);
        p.title = j.contains("title") && j.at("title").is_string()
                      ? j.at("title").get<std::string>()
                      : "";
        p.text = require_string(j, "text", lineno, path);
        if (!seen.insert(p.id).second)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": duplicate passage id '" + p.id + "'");
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Query> load_queries(const std::string& path) {
    std::vector<Query> out;
    std::unordered_set<std::string> seen;
    size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j = parse_line(line, lineno, path);
        Query q;
        q.id = require_string(j, "_id", lineno, path);
        q.text = require_string(j, "text", lineno, path);
        if (!seen.insert(q.id).second)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": duplicate query id '" + q.id + "'");
        out.push_back(std::move(q));
    }
    return out;
}

Qrels load_qrels(const std::string& path) {
    Qrels qrels;
    auto lines = read_lines(path);
    size_t lineno = 0;
    bool header_skipped = false;
    for (const auto& line : lines) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream ss(line);
        std::string qid, pid, score;
        if (!std::getline(ss, qid, '\t') || !std::getline(ss, pid, '\t') ||
            !std::getline(ss, score, '\t'))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 3 tab-separated columns");
        if (!header_skipped) {
            header_skipped = true;
            continue;  // "query-id corpus-id score" header row
        }
        score = trim(score);
        int grade = 0;
        try {
            size_t pos = 0;
            grade = std::stoi(score, &pos);
            if (pos != score.size()) throw std::invalid_argument(score);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": non-integer score '" + score + "'");
        }
        auto& row = qrels.judgments[qid];
        if (row.count(pid)) ++qrels.duplicate_count;
        row[pid] = grade;  // last wins
    }
    return qrels;
}

void save_corpus(const std::vector<Passage>& passages, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& p : passages) {
        json j{{"_id", p.id}, {"title", p.title}, {"text", p.text}};
        out << j.dump() << "\n";
    }
}

void save_queries(const std::vector<Query>& queries, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& q : queries) {
        json j{{"_id", q.id}, {"text", q.text}};
        out << j.dump() << "\n";
    }
}

void save_qrels(const Qrels& qrels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "query-id\tcorpus-id\tscore\n";
    for (const auto& [qid, row] : qrels.judgments)
        for (const auto& [pid, grade] : row)
            out << qid << "\t" << pid << "\t" << grade << "\n";
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "qrels");
    save_corpus(ds.passages, (fs::path(dir) / "corpus.jsonl").string());
    save_queries(ds.queries, (fs::path(dir) / "queries.jsonl").string());
    save_qrels(ds.qrels, (fs::path(dir) / "qrels" / "test.tsv").string());
}

Dataset load_dataset(const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    Dataset ds;
    ds.name = name.empty() ? fs::path(dir).filename().string() : name;
    ds.passages = load_corpus((fs::path(dir) / "corpus.jsonl").string());
    ds.queries = load_queries((fs::path(dir) / "queries.jsonl").string());
    ds.qrels = load_qrels((fs::path(dir) / "qrels" / "test.tsv").string());
    return ds;
}

std::vector<std::string> validate_dataset(const Dataset& ds) {
    std::vector<std::string> violations;
    std::unordered_set<std::string> pids, qids;
    for (const auto& p : ds.passages) {
        if (p.id.empty()) violations.push_back("passage with empty id");
        if (!pids.insert(p.id).second)
            violations.push_back("duplicate passage id '" + p.id + "'");
        if (trim(p.text).empty())
            violations.push_back("passage '" + p.id + "' has empty text");
    }
    for (const auto& q : ds.queries) {
        if (!qids.insert(q.id).second)
            violations.push_back("duplicate query id '" + q.id + "'");
        if (trim(q.text).empty())
            violations.push_back("query '" + q.id + "' has empty text");
    }
    for (const auto& [qid, row] : ds.qrels.judgments) {
        if (!qids.count(qid))
            violations.push_back("qrels references unknown query id '" + qid + "'");
        for (const auto& [pid, grade] : row) {
            if (!pids.count(pid))
                violations.push_back("qrels(" + qid + ") references unknown passage id '" +
                                     pid + "'");
            if (grade < 0)
                violations.push_back("qrels(" + qid + ", " + pid + ") has negative grade");
        }
    }
    return violations;
}

std::vector<std::string> default_synthetic_vocab() {
    std::vector<std::string> vocab;
    static const char* syllables[] = {"ba", "ce", "di", "fo", "gu", "ka",
                                      "le", "mi", "no", "pu", "ra", "se"};
    // 144 two-syllable topic words
    for (const char* a : syllables)
        for (const char* b : syllables) vocab.push_back(std::string(a) + b);
    return vocab;
}

Dataset make_synthetic_dataset(uint64_t seed, int n_queries, int n_passages,
                               const std::vector<std::string>& vocab_in) {
    if (n_queries < 1 || n_passages < n_queries)
        throw std::invalid_argument("need n_passages >= n_queries >= 1");
    std::vector<std::string> vocab = vocab_in.empty() ? default_synthetic_vocab() : vocab_in;
    if (vocab.size() < 8)
        throw std::invalid_argument("synthetic vocab needs at least 8 words");

    // Split the word list into topic words (query keys) and filler words.
    size_t n_topics = std::max<size_t>(4, vocab.size() * 3 / 4);
    std::vector<std::string> topics(vocab.begin(), vocab.begin() + n_topics);
    std::vector<std::string> fillers(vocab.begin() + n_topics, vocab.end());
    if (fillers.empty()) fillers.push_back(topics.back());

    Rng rng(seed);
    const int keys_per_query = topics.size() >= 3 ? 3 : 1;

    auto pick_keys = [&](int n) {
        std::set<size_t> chosen;
        while (static_cast<int>(chosen.size()) < n)
            chosen.insert(rng.next_below(topics.size()));
        return std::vector<size_t>(chosen.begin(), chosen.end());
    };

    Dataset ds;
    ds.name = "synthetic";

    std::set<std::vector<size_t>> used_key_sets;
    std::vector<std::vector<size_t>> query_keys(n_queries);
    for (int i = 0; i < n_queries; ++i) {
        std::vector<size_t> keys;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            keys = pick_keys(keys_per_query);
            if (used_key_sets.insert(keys).second) break;
            keys.clear();
        }
        if (keys.empty())
            throw std::runtime_error("could not draw a unique key set; vocab too small");
        query_keys[i] = keys;

        Query q;
        q.id = "q" + std::to_string(i);
        q.text = "which passage talks about";
        for (size_t k : keys) q.text += " " + topics[k];
        ds.queries.push_back(std::move(q));

        Passage p;
        p.id = "d" + std::to_string(i);
        std::vector<std::string> words;
        for (size_t k : keys) words.push_back(topics[k]);
        for (int f = 0; f < 5; ++f)
            words.push_back(fillers[rng.next_below(fillers.size())]);
        // deterministic shuffle
        for (size_t w = words.size(); w > 1; --w)
            std::swap(words[w - 1], words[rng.next_below(w)]);
        for (size_t w = 0; w < words.size(); ++w)
            p.text += (w ? " " : "") + words[w];
        ds.passages.push_back(std::move(p));

        ds.qrels.judgments[ds.queries.back().id][ds.passages.back().id] = 1;
    }

    // Distractors: random topic words, but never a superset of any query's keys.
    for (int i = n_queries; i < n_passages; ++i) {
        Passage p;
        p.id = "d" + std::to_string(i);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            std::vector<size_t> keys = pick_keys(keys_per_query);
            bool collides = false;
            for (const auto& qk : query_keys) {
                if (std::includes(keys.begin(), keys.end(), qk.begin(), qk.end())) {
                    collides = true;
                    break;
                }
            }
            if (collides) continue;
            std::vector<std::string> words;
            for (size_t k : keys) words.push_back(topics[k]);
            for (int f = 0; f < 5; ++f)
                words.push_back(fillers[rng.next_below(fillers.size())]);
            for (size_t w = words.size(); w > 1; --w)
                std::swap(words[w - 1], words[rng.next_below(w)]);
            p.text.clear();
            for (size_t w = 0; w < words.size(); ++w)
                p.text += (w ? " " : "") + words[w];
            break;
        }
        if (p.text.empty())
            throw std::runtime_error("could not draw a non-colliding distractor");
        ds.passages.push_back(std::move(p));
    }

    return ds;
}

} // namespace minirank
