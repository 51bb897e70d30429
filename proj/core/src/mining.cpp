#include "minirank/mining.hpp"

#include "minirank/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace minirank {

MiningResult mine_negatives(const EmbedderModel& teacher, const Vocab& vocab,
                            const VectorIndex& index, const Dataset& dataset,
                            const MiningConfig& cfg) {
    if (cfg.n_negatives < 1) throw std::invalid_argument("n_negatives must be >= 1");
    if (!(cfg.perc_margin > 0.0 && cfg.perc_margin <= 1.0))
        throw std::invalid_argument("perc_margin must be in (0, 1]");

    std::unordered_map<std::string, int> row_of;
    for (int i = 0; i < index.size(); ++i) row_of[index.ids()[static_cast<size_t>(i)]] = i;

    // output ordered by query id
    std::vector<const Query*> queries;
    for (const auto& q : dataset.queries) queries.push_back(&q);
    std::sort(queries.begin(), queries.end(),
              [](const Query* a, const Query* b) { return a->id < b->id; });

    MiningResult result;
    Rng rng(cfg.seed);

    for (const Query* q : queries) {
        auto jit = dataset.qrels.judgments.find(q->id);
        std::set<std::string> relevant;
        std::string positive_id;
        int best_grade = 0;
        if (jit != dataset.qrels.judgments.end()) {
            for (const auto& [pid, grade] : jit->second) {
                if (grade <= 0) continue;
                relevant.insert(pid);
                if (grade > best_grade || (grade == best_grade && pid < positive_id)) {
                    best_grade = grade;
                    positive_id = pid;
                }
            }
        }
        if (positive_id.empty()) {
            ++result.skipped_no_positive;
            continue;
        }
        auto pos_row = row_of.find(positive_id);
        if (pos_row == row_of.end()) {
            ++result.skipped_no_positive;
            continue;
        }

        Eigen::VectorXd q_vec = embed_query(teacher, vocab, q->text);
        double pos_score = index.matrix().row(pos_row->second).dot(q_vec);

        SearchResult candidates = search_exact(index, q_vec, cfg.candidate_pool_k);
        bool apply_threshold = pos_score > 0.0;
        if (!apply_threshold) ++result.threshold_skipped;
        double threshold = cfg.perc_margin * pos_score;

        MinedExample ex;
        ex.query_id = q->id;
        ex.positive_id = positive_id;
        ex.teacher_scores[positive_id] = pos_score;
        for (const auto& [pid, score] : candidates.hits) {
            if (static_cast<int>(ex.negative_ids.size()) >= cfg.n_negatives) break;
            if (relevant.count(pid)) continue;
            if (apply_threshold && score >= threshold) continue;
            ex.negative_ids.push_back(pid);
            ex.teacher_scores[pid] = score;
        }

        // backfill with seeded random non-relevant passages
        std::unordered_set<std::string> chosen(ex.negative_ids.begin(), ex.negative_ids.end());
        int guard = 0;
        while (static_cast<int>(ex.negative_ids.size()) < cfg.n_negatives &&
               guard++ < 100000) {
            if (index.size() == 0) break;
            const std::string& pid =
                index.ids()[rng.next_below(static_cast<uint64_t>(index.size()))];
            if (relevant.count(pid) || chosen.count(pid)) continue;
            chosen.insert(pid);
            ex.negative_ids.push_back(pid);
            ex.teacher_scores[pid] = index.matrix().row(row_of.at(pid)).dot(q_vec);
        }
        result.examples.push_back(std::move(ex));
    }
    return result;
}

void save_mined(const std::vector<MinedExample>& examples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& ex : examples) {
        nlohmann::json j{{"query_id", ex.query_id},
                         {"pos", ex.positive_id},
                         {"negs", ex.negative_ids},
                         {"scores", ex.teacher_scores}};
        out << j.dump() << "\n";
    }
}

std::vector<MinedExample> load_mined(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<MinedExample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed mined example: " + e.what());
        }
        MinedExample ex;
        ex.query_id = j.at("query_id").get<std::string>();
        ex.positive_id = j.at("pos").get<std::string>();
        ex.negative_ids = j.at("negs").get<std::vector<std::string>>();
        if (j.contains("scores"))
            ex.teacher_scores = j.at("scores").get<std::map<std::string, double>>();
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace minirank
