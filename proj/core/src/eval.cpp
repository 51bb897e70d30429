#include "minirank/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace minirank {

double ndcg_at_k(const std::vector<std::string>& ranked_ids,
                 const std::map<std::string, int>& qrels_for_query, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    std::vector<int> grades;
    for (const auto& [pid, grade] : qrels_for_query)
        if (grade > 0) grades.push_back(grade);
    if (grades.empty()) return 0.0;

    double dcg = 0.0;
    int n = std::min<int>(k, static_cast<int>(ranked_ids.size()));
    for (int i = 0; i < n; ++i) {
        auto it = qrels_for_query.find(ranked_ids[static_cast<size_t>(i)]);
        if (it == qrels_for_query.end() || it->second <= 0) continue;
        dcg += (std::pow(2.0, it->second) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }

    std::sort(grades.begin(), grades.end(), std::greater<int>());
    double idcg = 0.0;
    int m = std::min<int>(k, static_cast<int>(grades.size()));
    for (int i = 0; i < m; ++i)
        idcg += (std::pow(2.0, grades[static_cast<size_t>(i)]) - 1.0) /
                std::log2(static_cast<double>(i) + 2.0);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

RunEval evaluate_run(const std::vector<std::pair<std::string, std::vector<std::string>>>& run,
                     const Qrels& qrels, int k) {
    if (run.empty()) throw std::invalid_argument("empty run");
    RunEval eval;
    double total = 0.0;
    for (const auto& [qid, ranked] : run) {
        auto it = qrels.judgments.find(qid);
        if (it == qrels.judgments.end()) {
            eval.violations.push_back(qid);
            continue;
        }
        bool has_relevant = false;
        for (const auto& [pid, grade] : it->second)
            if (grade > 0) has_relevant = true;
        if (!has_relevant) {
            ++eval.excluded_no_relevant;
            continue;
        }
        double v = ndcg_at_k(ranked, it->second, k);
        eval.per_query.push_back({qid, v});
        total += v;
    }
    eval.mean_ndcg = eval.per_query.empty() ? 0.0
                                            : total / static_cast<double>(eval.per_query.size());
    return eval;
}

namespace {

std::string fmt4(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
}

} // namespace

std::string render_report_text(const EvalReport& report) {
    size_t label_w = 24;
    for (const auto& row : report.rows) label_w = std::max(label_w, row.label.size() + 2);

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(label_w)) << "Pipeline"
        << std::right << std::setw(10) << "Avg";
    for (const auto& name : report.dataset_names) out << std::setw(12) << name;
    out << "\n";
    for (const auto& row : report.rows) {
        out << std::left << std::setw(static_cast<int>(label_w)) << row.label
            << std::right << std::setw(10) << fmt4(row.avg);
        for (const auto& name : report.dataset_names) {
            auto it = row.per_dataset.find(name);
            out << std::setw(12) << (it == row.per_dataset.end() ? "-" : fmt4(it->second));
        }
        out << "\n";
    }
    return out.str();
}

std::string render_report_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"label", row.label},
                        {"avg", row.avg},
                        {"per_dataset", row.per_dataset}});
    nlohmann::json j{{"meta",
                      {{"datasets", report.dataset_names},
                       {"k", report.k},
                       {"timestamp", report.timestamp},
                       {"config_hashes", report.config_hashes}}},
                     {"rows", rows}};
    return j.dump(2);
}

EvalReport parse_report_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    EvalReport report;
    const auto& meta = j.at("meta");
    report.dataset_names = meta.at("datasets").get<std::vector<std::string>>();
    report.k = meta.at("k").get<int>();
    report.timestamp = meta.value("timestamp", "");
    if (meta.contains("config_hashes"))
        report.config_hashes = meta.at("config_hashes").get<std::map<std::string, std::string>>();
    for (const auto& row : j.at("rows")) {
        EvalRow r;
        r.label = row.at("label").get<std::string>();
        r.avg = row.at("avg").get<double>();
        r.per_dataset = row.at("per_dataset").get<std::map<std::string, double>>();
        report.rows.push_back(std::move(r));
    }
    return report;
}

} // namespace minirank
