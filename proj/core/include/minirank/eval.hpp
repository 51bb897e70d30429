#pragma once

#include <map>
#include <string>
#include <vector>

#include "minirank/corpus.hpp"

namespace minirank {

/// NDCG@k with exponential gains (2^grade - 1) and log2(i+1) discounts, the
/// BEIR convention. Queries without any relevant passage are the caller's
/// concern (evaluate_run excludes them).
double ndcg_at_k(const std::vector<std::string>& ranked_ids,
                 const std::map<std::string, int>& qrels_for_query, int k = 10);

struct QueryEval {
    std::string query_id;
    double ndcg = 0.0;
};

struct RunEval {
    double mean_ndcg = 0.0;
    std::vector<QueryEval> per_query;     // evaluable queries only
    int excluded_no_relevant = 0;         // queries with no relevant passage
    std::vector<std::string> violations;  // run query ids absent from qrels
};

/// Mean NDCG@k over evaluable queries of a run (query id -> ranked ids).
RunEval evaluate_run(const std::vector<std::pair<std::string, std::vector<std::string>>>& run,
                     const Qrels& qrels, int k = 10);

struct EvalRow {
    std::string label;
    double avg = 0.0;
    std::map<std::string, double> per_dataset;
};

struct EvalReport {
    std::vector<std::string> dataset_names;  // column order
    std::vector<EvalRow> rows;
    int k = 10;
    std::string timestamp;
    std::map<std::string, std::string> config_hashes;
};

/// Fixed-layout text table: label column, Avg first, then datasets in
/// config order, 4-decimal formatting.
std::string render_report_text(const EvalReport& report);
std::string render_report_json(const EvalReport& report);
EvalReport parse_report_json(const std::string& json_text);

} // namespace minirank
