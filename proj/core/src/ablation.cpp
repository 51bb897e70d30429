#include "minirank/ablation.hpp"

#include "minirank/eval.hpp"
#include "minirank/mining.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <stdexcept>

namespace minirank {

namespace {

std::vector<std::pair<std::string, std::vector<std::string>>>
run_to_pairs(const RetrievalRun& run) {
    std::vector<std::pair<std::string, std::vector<std::string>>> pairs;
    pairs.reserve(run.results.size());
    for (const auto& r : run.results) {
        std::vector<std::string> ids;
        ids.reserve(r.ranked.size());
        for (const auto& item : r.ranked) ids.push_back(item.id);
        pairs.emplace_back(r.query_id, std::move(ids));
    }
    return pairs;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

} // namespace

std::string AblationCell::label() const {
    return size_label + "/" + to_string(attention) + "/" + to_string(loss);
}

double AblationReport::marginal_mean(
    const std::function<bool(const AblationCell&)>& pred) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& cell : cells) {
        if (!pred(cell)) continue;
        sum += cell.mean_ndcg;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("no ablation cells match the predicate");
    return sum / n;
}

AblationReport run_ablation(const Dataset& dataset, const Vocab& vocab,
                            const AblationGrid& grid, const AblationSetup& setup,
                            const std::function<void(const std::string&)>& log) {
    if (grid.sizes.empty() || grid.attention_modes.empty() || grid.losses.empty() ||
        grid.seeds.empty())
        throw std::invalid_argument("ablation grid must have sizes, modes, losses, seeds");
    setup.pipeline.validate();

    AblationReport report;
    report.k = setup.eval_k;
    for (const auto& size : grid.sizes)
        for (auto mode : grid.attention_modes)
            for (auto loss : grid.losses) {
                AblationCell cell;
                cell.size_label = size.label;
                cell.attention = mode;
                cell.loss = loss;
                report.cells.push_back(std::move(cell));
            }

    for (uint64_t seed : grid.seeds) {
        if (log) log("seed " + std::to_string(seed) + ": training teacher retriever");

        // Shared per-seed setup: teacher retriever, index, mined train set.
        TrainConfig teacher_train = setup.teacher_train;
        teacher_train.seed = seed;
        ModelConfig teacher_cfg = setup.teacher_config;
        teacher_cfg.seed = seed;
        EmbedderModel teacher = train_biencoder(dataset, {}, vocab, teacher_cfg,
                                                setup.teacher_d_embed, teacher_train);
        VectorIndex index = run_indexing(dataset, teacher, vocab);

        MiningConfig mining = setup.mining;
        mining.seed = seed;
        MiningResult mined = mine_negatives(teacher, vocab, index, dataset, mining);

        uint64_t teacher_fp = embedder_fingerprint(teacher);
        RetrievalRun baseline =
            run_pipeline(dataset, index, teacher, vocab, setup.pipeline, nullptr);
        RunEval base_eval =
            evaluate_run(run_to_pairs(baseline), dataset.qrels, setup.eval_k);
        report.baseline_per_seed.push_back(base_eval.mean_ndcg);
        (void)teacher_fp;

        size_t cell_idx = 0;
        for (const auto& size : grid.sizes)
            for (auto mode : grid.attention_modes)
                for (auto loss : grid.losses) {
                    AblationCell& cell = report.cells[cell_idx++];
                    if (log)
                        log("seed " + std::to_string(seed) + ": cell " + cell.label());

                    ModelConfig mc;
                    mc.vocab_size = vocab.size();
                    mc.d_model = size.d_model;
                    mc.n_heads = size.n_heads;
                    mc.n_layers = size.n_layers;
                    mc.d_ff = size.d_ff;
                    mc.max_seq_len = setup.reranker_max_seq_len;
                    mc.attention_mode = mode;
                    mc.seed = seed;

                    TrainConfig tc = setup.reranker_train;
                    tc.loss = loss;
                    tc.seed = seed;

                    RerankerModel reranker =
                        train_reranker(dataset, mined.examples, vocab, mc, tc);
                    RetrievalRun run = run_pipeline(dataset, index, teacher, vocab,
                                                    setup.pipeline, &reranker);
                    RunEval eval =
                        evaluate_run(run_to_pairs(run), dataset.qrels, setup.eval_k);
                    cell.per_seed_ndcg.push_back(eval.mean_ndcg);
                }
    }

    report.baseline_mean = mean(report.baseline_per_seed);
    for (auto& cell : report.cells) cell.mean_ndcg = mean(cell.per_seed_ndcg);
    return report;
}

std::string render_ablation_text(const AblationReport& report) {
    std::ostringstream ss;
    ss.precision(4);
    ss << std::fixed;
    ss << "retriever baseline NDCG@" << report.k << ": " << report.baseline_mean << " (";
    for (size_t i = 0; i < report.baseline_per_seed.size(); ++i)
        ss << (i ? ", " : "") << report.baseline_per_seed[i];
    ss << ")\n";
    for (const auto& cell : report.cells) {
        ss << cell.label() << ": " << cell.mean_ndcg << " (";
        for (size_t i = 0; i < cell.per_seed_ndcg.size(); ++i)
            ss << (i ? ", " : "") << cell.per_seed_ndcg[i];
        ss << ")\n";
    }
    return ss.str();
}

std::string render_ablation_json(const AblationReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : report.cells)
        cells.push_back({{"size", cell.size_label},
                         {"attention", to_string(cell.attention)},
                         {"loss", to_string(cell.loss)},
                         {"mean_ndcg", cell.mean_ndcg},
                         {"per_seed_ndcg", cell.per_seed_ndcg}});
    nlohmann::json j{{"k", report.k},
                     {"baseline_mean", report.baseline_mean},
                     {"baseline_per_seed", report.baseline_per_seed},
                     {"cells", cells}};
    return j.dump(2);
}

} // namespace minirank
