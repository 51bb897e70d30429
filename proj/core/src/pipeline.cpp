#include "minirank/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace minirank {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

} // namespace

void PipelineConfig::validate() const {
    if (k_retrieve < 1) throw std::invalid_argument("k_retrieve must be >= 1");
    int kr = effective_k_rerank();
    if (final_k < 1 || final_k > kr || kr > k_retrieve)
        throw std::invalid_argument("need final_k <= k_rerank <= k_retrieve");
    if (use_ann && n_probe < 1) throw std::invalid_argument("n_probe must be >= 1");
}

VectorIndex run_indexing(const Dataset& dataset, const EmbedderModel& embedder,
                         const Vocab& vocab, double* passages_per_sec,
                         double* wall_seconds) {
    auto start = Clock::now();
    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> vecs;
    ids.reserve(dataset.passages.size());
    vecs.reserve(dataset.passages.size());
    for (const auto& p : dataset.passages) {
        ids.push_back(p.id);
        vecs.push_back(embed_passage(embedder, vocab, p.text));
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (wall_seconds) *wall_seconds = secs;
    if (passages_per_sec)
        *passages_per_sec = secs > 0 ? static_cast<double>(ids.size()) / secs : 0.0;
    return build_index(ids, vecs, embedder_fingerprint(embedder));
}

QueryResult run_query(const VectorIndex& index, const EmbedderModel& embedder,
                      uint64_t embedder_fp, const Vocab& vocab,
                      const PipelineConfig& config, const Query& query,
                      const Dataset& dataset, const RerankerModel* reranker,
                      long* rerank_calls) {
    config.validate();
    if (index.embedder_fingerprint() != 0 && embedder_fp != 0 &&
        index.embedder_fingerprint() != embedder_fp)
        throw std::runtime_error("index was built with a different embedder (fingerprint mismatch)");

    QueryResult result;
    result.query_id = query.id;

    auto t0 = Clock::now();
    Eigen::VectorXd q_vec = embed_query(embedder, vocab, query.text);
    result.timings.embed_ms = ms_since(t0);

    t0 = Clock::now();
    SearchResult retrieved = config.use_ann
                                 ? search_ann(index, q_vec, config.k_retrieve, config.n_probe)
                                 : search_exact(index, q_vec, config.k_retrieve);
    result.timings.search_ms = ms_since(t0);

    if (!reranker) {
        int n = std::min<int>(config.final_k, static_cast<int>(retrieved.hits.size()));
        for (int i = 0; i < n; ++i)
            result.ranked.push_back({retrieved.hits[static_cast<size_t>(i)].first,
                                     retrieved.hits[static_cast<size_t>(i)].second});
        return result;
    }

    std::unordered_map<std::string, const Passage*> by_id;
    for (const auto& p : dataset.passages) by_id[p.id] = &p;

    t0 = Clock::now();
    std::vector<std::pair<std::string, std::string>> candidates;
    int kr = std::min<int>(config.effective_k_rerank(), static_cast<int>(retrieved.hits.size()));
    for (int i = 0; i < kr; ++i) {
        const auto& [pid, score] = retrieved.hits[static_cast<size_t>(i)];
        auto it = by_id.find(pid);
        if (it == by_id.end())
            throw std::runtime_error("retrieved passage '" + pid + "' not in dataset");
        candidates.emplace_back(pid, it->second->text);
    }
    auto scored = rerank(*reranker, vocab, query.text, candidates, config.final_k);
    if (rerank_calls) *rerank_calls += static_cast<long>(candidates.size());
    result.timings.rerank_ms = ms_since(t0);

    for (const auto& sp : scored) result.ranked.push_back({sp.passage_id, sp.logit});
    return result;
}

RetrievalRun run_pipeline(const Dataset& dataset, const VectorIndex& index,
                          const EmbedderModel& embedder, const Vocab& vocab,
                          const PipelineConfig& config, const RerankerModel* reranker) {
    RetrievalRun run;
    run.label = config.label;
    run.embedder_fp = embedder_fingerprint(embedder);
    for (const auto& q : dataset.queries)
        run.results.push_back(run_query(index, embedder, run.embedder_fp, vocab, config, q,
                                        dataset, reranker));
    return run;
}

BenchmarkResult run_benchmark(const Dataset& dataset, const Vocab& vocab,
                              const std::vector<BenchmarkSpec>& specs,
                              const PipelineConfig& config) {
    BenchmarkResult result;
    for (const auto& spec : specs) {
        double pps = 0.0, secs = 0.0;
        VectorIndex index;
        try {
            index = run_indexing(dataset, *spec.embedder, vocab, &pps, &secs);
            ++result.indexing_passes;
        } catch (const std::exception& e) {
            result.errors.push_back(spec.embedder_label + ": indexing failed: " + e.what());
            continue;
        }

        auto run_one = [&](const std::string& label, const RerankerModel* rr) {
            try {
                PipelineConfig cfg = config;
                cfg.label = label;
                RetrievalRun run = run_pipeline(dataset, index, *spec.embedder, vocab, cfg, rr);
                run.indexing_seconds = secs;
                run.passages_per_sec = pps;
                result.runs.push_back(std::move(run));
            } catch (const std::exception& e) {
                result.errors.push_back(label + ": " + e.what());
            }
        };

        run_one(spec.embedder_label, nullptr);  // baseline retriever-only row
        for (const auto& [label, rr] : spec.rerankers)
            run_one(spec.embedder_label + " + " + label, rr);
    }
    return result;
}

void save_run(const RetrievalRun& run, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write run file: " + path);
    nlohmann::json meta{{"label", run.label},
                        {"indexing_seconds", run.indexing_seconds},
                        {"passages_per_sec", run.passages_per_sec},
                        {"embedder_fp", run.embedder_fp}};
    out << nlohmann::json{{"meta", meta}}.dump() << "\n";
    for (const auto& r : run.results) {
        nlohmann::json ids = nlohmann::json::array();
        nlohmann::json scores = nlohmann::json::array();
        for (const auto& item : r.ranked) {
            ids.push_back(item.id);
            scores.push_back(item.score);
        }
        nlohmann::json j{{"query_id", r.query_id},
                         {"ranked_ids", ids},
                         {"scores", scores},
                         {"timings",
                          {{"embed_ms", r.timings.embed_ms},
                           {"search_ms", r.timings.search_ms},
                           {"rerank_ms", r.timings.rerank_ms}}}};
        out << j.dump() << "\n";
    }
}

RetrievalRun load_run(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open run file: " + path);
    RetrievalRun run;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (first) {
            first = false;
            const auto& meta = j.at("meta");
            run.label = meta.value("label", "");
            run.indexing_seconds = meta.value("indexing_seconds", 0.0);
            run.passages_per_sec = meta.value("passages_per_sec", 0.0);
            run.embedder_fp = meta.value("embedder_fp", 0ull);
            continue;
        }
        QueryResult r;
        r.query_id = j.at("query_id").get<std::string>();
        auto ids = j.at("ranked_ids").get<std::vector<std::string>>();
        auto scores = j.at("scores").get<std::vector<double>>();
        for (size_t i = 0; i < ids.size(); ++i)
            r.ranked.push_back({ids[i], i < scores.size() ? scores[i] : 0.0});
        const auto& t = j.at("timings");
        r.timings.embed_ms = t.value("embed_ms", 0.0);
        r.timings.search_ms = t.value("search_ms", 0.0);
        r.timings.rerank_ms = t.value("rerank_ms", 0.0);
        run.results.push_back(std::move(r));
    }
    return run;
}

} // namespace minirank
