#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "minirank/eval.hpp"
#include "minirank/util.hpp"

using namespace minirank;

namespace {

// independent reference: literal DCG/IDCG evaluation
double brute_force_ndcg(const std::vector<std::string>& ranked,
                        const std::map<std::string, int>& qrels, int k) {
    double dcg = 0.0;
    for (int i = 0; i < std::min<int>(k, static_cast<int>(ranked.size())); ++i) {
        auto it = qrels.find(ranked[static_cast<size_t>(i)]);
        int grade = it == qrels.end() ? 0 : it->second;
        dcg += (std::pow(2.0, grade) - 1.0) / std::log2(i + 2.0);
    }
    std::vector<int> grades;
    for (const auto& [id, g] : qrels) grades.push_back(g);
    std::sort(grades.rbegin(), grades.rend());
    double idcg = 0.0;
    for (int i = 0; i < std::min<int>(k, static_cast<int>(grades.size())); ++i)
        idcg += (std::pow(2.0, grades[static_cast<size_t>(i)]) - 1.0) / std::log2(i + 2.0);
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

} // namespace

TEST_CASE("ndcg hand cases") {
    std::map<std::string, int> qrels{{"d1", 1}};
    CHECK(ndcg_at_k({"d1", "d2"}, qrels, 10) == 1.0);
    CHECK(ndcg_at_k({"d2", "d1"}, qrels, 10) == 1.0 / std::log2(3.0));
    CHECK(ndcg_at_k({"d2", "d1"}, qrels, 10) == doctest::Approx(0.63093).epsilon(1e-5));
    CHECK(ndcg_at_k({"d2", "d3"}, qrels, 10) == 0.0);
    CHECK(ndcg_at_k({}, qrels, 10) == 0.0);
    CHECK(ndcg_at_k({"d1"}, {}, 10) == 0.0);
}

TEST_CASE("ndcg matches the brute-force reference on random instances") {
    Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        int n_docs = 1 + static_cast<int>(rng.next_below(8));
        std::vector<std::string> ids;
        for (int i = 0; i < n_docs; ++i) ids.push_back("d" + std::to_string(i));
        std::map<std::string, int> qrels;
        for (const auto& id : ids)
            if (rng.next_below(2)) qrels[id] = static_cast<int>(rng.next_below(3));
        // random ranking
        std::vector<std::string> ranked = ids;
        for (size_t i = ranked.size(); i > 1; --i)
            std::swap(ranked[i - 1], ranked[rng.next_below(i)]);
        int k = 1 + static_cast<int>(rng.next_below(10));
        CAPTURE(trial);
        CHECK(std::abs(ndcg_at_k(ranked, qrels, k) - brute_force_ndcg(ranked, qrels, k)) <
              1e-10);
    }
}

TEST_CASE("evaluate_run averages per-query values and excludes unjudgeable queries") {
    Qrels qrels;
    qrels.judgments["q1"]["d1"] = 1;
    qrels.judgments["q2"]["d2"] = 1;
    qrels.judgments["q3"];  // judged but nothing relevant

    std::vector<std::pair<std::string, std::vector<std::string>>> run{
        {"q1", {"d1", "d2"}},   // perfect: 1.0
        {"q2", {"d1", "d2"}},   // relevant at rank 2
        {"q3", {"d1"}},         // no relevant passage: excluded
        {"q4", {"d1"}}};        // not in qrels at all: violation + excluded
    RunEval eval = evaluate_run(run, qrels, 10);
    REQUIRE(eval.per_query.size() == 2);
    double expected = (1.0 + 1.0 / std::log2(3.0)) / 2.0;
    CHECK(eval.mean_ndcg == doctest::Approx(expected).epsilon(1e-12));
    CHECK(eval.excluded_no_relevant == 1);
    CHECK(eval.violations == std::vector<std::string>{"q4"});

    // recomputing the mean from per-query values matches
    double mean = 0.0;
    for (const auto& pq : eval.per_query) mean += pq.ndcg;
    mean /= static_cast<double>(eval.per_query.size());
    CHECK(mean == doctest::Approx(eval.mean_ndcg).epsilon(1e-12));
}

TEST_CASE("all-perfect run evaluates to 1.0") {
    Qrels qrels;
    std::vector<std::pair<std::string, std::vector<std::string>>> run;
    for (int i = 0; i < 5; ++i) {
        std::string q = "q" + std::to_string(i), d = "d" + std::to_string(i);
        qrels.judgments[q][d] = 1;
        run.push_back({q, {d, "other"}});
    }
    CHECK(evaluate_run(run, qrels, 10).mean_ndcg == 1.0);
}

TEST_CASE("report renders fixed layout with 4-decimal values") {
    EvalReport report;
    report.k = 10;
    report.dataset_names = {"NQ"};
    report.rows.push_back({"embedding-model", 0.61, {{"NQ", 0.61}}});
    report.rows.push_back({"+ reranker", 0.7529, {{"NQ", 0.7529}}});
    std::string text = render_report_text(report);
    CHECK(text.find("0.6100") != std::string::npos);
    CHECK(text.find("0.7529") != std::string::npos);
    CHECK(text.find("Avg") != std::string::npos);
    CHECK(text.find("embedding-model") < text.find("+ reranker"));
}

TEST_CASE("report JSON round-trips") {
    EvalReport report;
    report.k = 10;
    report.dataset_names = {"NQ", "HotpotQA"};
    report.timestamp = "2026-01-01T00:00:00Z";
    report.config_hashes["pipeline"] = "abc123";
    report.rows.push_back({"base", 0.5, {{"NQ", 0.4}, {"HotpotQA", 0.6}}});
    EvalReport back = parse_report_json(render_report_json(report));
    CHECK(back.k == report.k);
    CHECK(back.dataset_names == report.dataset_names);
    CHECK(back.timestamp == report.timestamp);
    CHECK(back.config_hashes == report.config_hashes);
    REQUIRE(back.rows.size() == 1);
    CHECK(back.rows[0].label == "base");
    CHECK(back.rows[0].avg == report.rows[0].avg);
    CHECK(back.rows[0].per_dataset == report.rows[0].per_dataset);
}
