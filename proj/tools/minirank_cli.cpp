// minirank command-line front end: dataset prep, vocab building, training,
// mining, indexing, querying, evaluation, ablations, profiling, and serving.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "minirank/ablation.hpp"
#include "minirank/biencoder.hpp"
#include "minirank/corpus.hpp"
#include "minirank/crossencoder.hpp"
#include "minirank/eval.hpp"
#include "minirank/index.hpp"
#include "minirank/mining.hpp"
#include "minirank/perf.hpp"
#include "minirank/pipeline.hpp"
#include "minirank/service.hpp"
#include "minirank/tokenizer.hpp"
#include "minirank/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace minirank;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    if (!j.is_object()) throw UsageError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) throw UsageError("unknown key '" + it.key() + "' in " + where);
    }
}

struct AppConfig {
    // model (vocab_size filled in after the vocab is loaded)
    ModelConfig model;
    int d_embed = 16;
    int vocab_max_size = 512;
    TrainConfig training;
    MiningConfig mining;
    PipelineConfig pipeline;
    int eval_k = 10;
    // dataset synthesis
    int n_queries = 100;
    int n_passages = 500;
    std::string dataset_name = "synthetic";
    // ablation grid
    AblationGrid grid;
    AblationSetup ablation;
    // profiling
    int perf_iters = 20;
    int perf_passages = 640;
    int perf_candidates = 40;
    // serving
    ServiceConfig service;

    json resolved;  // snapshot of defaults + overrides actually in effect
};

ModelConfig parse_model(const json& j, const std::string& where, ModelConfig base) {
    check_keys(j, {"d_model", "n_heads", "n_layers", "d_ff", "max_seq_len",
                   "attention_mode", "seed", "d_embed"}, where);
    base.d_model = j.value("d_model", base.d_model);
    base.n_heads = j.value("n_heads", base.n_heads);
    base.n_layers = j.value("n_layers", base.n_layers);
    base.d_ff = j.value("d_ff", base.d_ff);
    base.max_seq_len = j.value("max_seq_len", base.max_seq_len);
    if (j.contains("attention_mode"))
        base.attention_mode = attention_mode_from_string(j.at("attention_mode"));
    base.seed = j.value("seed", base.seed);
    return base;
}

TrainConfig parse_training(const json& j, const std::string& where, TrainConfig base) {
    check_keys(j, {"loss", "tau", "n_negatives", "n_random_negatives", "learning_rate",
                   "steps", "batch_size", "weight_decay", "warmup_fraction", "seed"}, where);
    if (j.contains("loss")) base.loss = loss_kind_from_string(j.at("loss"));
    base.tau = j.value("tau", base.tau);
    base.n_negatives = j.value("n_negatives", base.n_negatives);
    base.n_random_negatives = j.value("n_random_negatives", base.n_random_negatives);
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.steps = j.value("steps", base.steps);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.weight_decay = j.value("weight_decay", base.weight_decay);
    base.warmup_fraction = j.value("warmup_fraction", base.warmup_fraction);
    base.seed = j.value("seed", base.seed);
    return base;
}

json model_to_json(const ModelConfig& m, int d_embed) {
    return {{"d_model", m.d_model},     {"n_heads", m.n_heads},
            {"n_layers", m.n_layers},   {"d_ff", m.d_ff},
            {"max_seq_len", m.max_seq_len},
            {"attention_mode", to_string(m.attention_mode)},
            {"seed", m.seed},           {"d_embed", d_embed}};
}

json training_to_json(const TrainConfig& t) {
    return {{"loss", to_string(t.loss)},
            {"tau", t.tau},
            {"n_negatives", t.n_negatives},
            {"n_random_negatives", t.n_random_negatives},
            {"learning_rate", t.learning_rate},
            {"steps", t.steps},
            {"batch_size", t.batch_size},
            {"weight_decay", t.weight_decay},
            {"warmup_fraction", t.warmup_fraction},
            {"seed", t.seed}};
}

AppConfig load_config(const std::string& path) {
    AppConfig cfg;
    // model defaults sized for quick CPU experiments
    cfg.model.d_model = 32;
    cfg.model.n_heads = 2;
    cfg.model.n_layers = 2;
    cfg.model.d_ff = 64;
    cfg.model.max_seq_len = 48;

    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file: " + path);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw UsageError("malformed config JSON in " + path + ": " + e.what());
        }
    }
    check_keys(j, {"dataset", "vocab", "model", "training", "mining", "pipeline",
                   "eval", "ablation", "perf", "serve"}, "config");

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        check_keys(d, {"name", "n_queries", "n_passages", "seed"}, "config.dataset");
        cfg.dataset_name = d.value("name", cfg.dataset_name);
        cfg.n_queries = d.value("n_queries", cfg.n_queries);
        cfg.n_passages = d.value("n_passages", cfg.n_passages);
        cfg.model.seed = d.value("seed", cfg.model.seed);
    }
    if (j.contains("vocab")) {
        const json& v = j.at("vocab");
        check_keys(v, {"max_size"}, "config.vocab");
        cfg.vocab_max_size = v.value("max_size", cfg.vocab_max_size);
    }
    if (j.contains("model")) cfg.model = parse_model(j.at("model"), "config.model", cfg.model);
    if (j.contains("model")) cfg.d_embed = j.at("model").value("d_embed", cfg.d_embed);
    if (j.contains("training"))
        cfg.training = parse_training(j.at("training"), "config.training", cfg.training);
    if (j.contains("mining")) {
        const json& m = j.at("mining");
        check_keys(m, {"n_negatives", "perc_margin", "candidate_pool_k", "seed"},
                   "config.mining");
        cfg.mining.n_negatives = m.value("n_negatives", cfg.mining.n_negatives);
        cfg.mining.perc_margin = m.value("perc_margin", cfg.mining.perc_margin);
        cfg.mining.candidate_pool_k = m.value("candidate_pool_k", cfg.mining.candidate_pool_k);
        cfg.mining.seed = m.value("seed", cfg.mining.seed);
    }
    if (j.contains("pipeline")) {
        const json& p = j.at("pipeline");
        check_keys(p, {"k_retrieve", "k_rerank", "final_k", "use_ann", "n_probe", "label"},
                   "config.pipeline");
        cfg.pipeline.k_retrieve = p.value("k_retrieve", cfg.pipeline.k_retrieve);
        cfg.pipeline.k_rerank = p.value("k_rerank", cfg.pipeline.k_rerank);
        cfg.pipeline.final_k = p.value("final_k", cfg.pipeline.final_k);
        cfg.pipeline.use_ann = p.value("use_ann", cfg.pipeline.use_ann);
        cfg.pipeline.n_probe = p.value("n_probe", cfg.pipeline.n_probe);
        cfg.pipeline.label = p.value("label", cfg.pipeline.label);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, {"k"}, "config.eval");
        cfg.eval_k = e.value("k", cfg.eval_k);
    }
    if (j.contains("perf")) {
        const json& p = j.at("perf");
        check_keys(p, {"n_iters", "n_passages", "n_candidates"}, "config.perf");
        cfg.perf_iters = p.value("n_iters", cfg.perf_iters);
        cfg.perf_passages = p.value("n_passages", cfg.perf_passages);
        cfg.perf_candidates = p.value("n_candidates", cfg.perf_candidates);
    }
    if (j.contains("serve")) {
        const json& s = j.at("serve");
        check_keys(s, {"host", "port", "bearer_token_env", "max_passages_per_request",
                       "max_text_chars"}, "config.serve");
        cfg.service.host = s.value("host", cfg.service.host);
        cfg.service.port = s.value("port", cfg.service.port);
        cfg.service.bearer_token_env = s.value("bearer_token_env", cfg.service.bearer_token_env);
        cfg.service.max_passages_per_request =
            s.value("max_passages_per_request", cfg.service.max_passages_per_request);
        cfg.service.max_text_chars = s.value("max_text_chars", cfg.service.max_text_chars);
    }

    // ablation defaults: two sizes x two attention modes x two losses, 3 seeds
    cfg.grid.sizes = {{"small", 16, 2, 1, 32}, {"large", 32, 2, 2, 64}};
    cfg.grid.attention_modes = {AttentionMode::kCausal, AttentionMode::kBidirectional};
    cfg.grid.losses = {LossKind::kBce, LossKind::kInfoNce};
    cfg.grid.seeds = {1, 2, 3};
    if (j.contains("ablation")) {
        const json& a = j.at("ablation");
        check_keys(a, {"sizes", "attention_modes", "losses", "seeds", "teacher",
                       "reranker_training", "reranker_max_seq_len"}, "config.ablation");
        if (a.contains("sizes")) {
            cfg.grid.sizes.clear();
            for (const auto& s : a.at("sizes")) {
                check_keys(s, {"label", "d_model", "n_heads", "n_layers", "d_ff"},
                           "config.ablation.sizes[]");
                cfg.grid.sizes.push_back({s.at("label").get<std::string>(),
                                          s.value("d_model", 16), s.value("n_heads", 2),
                                          s.value("n_layers", 1), s.value("d_ff", 32)});
            }
        }
        if (a.contains("attention_modes")) {
            cfg.grid.attention_modes.clear();
            for (const auto& m : a.at("attention_modes"))
                cfg.grid.attention_modes.push_back(
                    attention_mode_from_string(m.get<std::string>()));
        }
        if (a.contains("losses")) {
            cfg.grid.losses.clear();
            for (const auto& l : a.at("losses"))
                cfg.grid.losses.push_back(loss_kind_from_string(l.get<std::string>()));
        }
        if (a.contains("seeds"))
            cfg.grid.seeds = a.at("seeds").get<std::vector<uint64_t>>();
        if (a.contains("teacher"))
            cfg.ablation.teacher_train =
                parse_training(a.at("teacher"), "config.ablation.teacher",
                               cfg.ablation.teacher_train);
        if (a.contains("reranker_training"))
            cfg.ablation.reranker_train =
                parse_training(a.at("reranker_training"), "config.ablation.reranker_training",
                               cfg.ablation.reranker_train);
        cfg.ablation.reranker_max_seq_len =
            a.value("reranker_max_seq_len", cfg.ablation.reranker_max_seq_len);
    }
    cfg.ablation.teacher_config = cfg.model;
    cfg.ablation.teacher_d_embed = cfg.d_embed;
    cfg.ablation.mining = cfg.mining;
    cfg.ablation.pipeline = cfg.pipeline;
    cfg.ablation.eval_k = cfg.eval_k;

    // resolved snapshot: every value in effect after defaults were applied
    json sizes = json::array();
    for (const auto& s : cfg.grid.sizes)
        sizes.push_back({{"label", s.label}, {"d_model", s.d_model}, {"n_heads", s.n_heads},
                         {"n_layers", s.n_layers}, {"d_ff", s.d_ff}});
    json modes = json::array(), losses = json::array();
    for (auto m : cfg.grid.attention_modes) modes.push_back(to_string(m));
    for (auto l : cfg.grid.losses) losses.push_back(to_string(l));
    cfg.resolved = {
        {"dataset", {{"name", cfg.dataset_name}, {"n_queries", cfg.n_queries},
                     {"n_passages", cfg.n_passages}, {"seed", cfg.model.seed}}},
        {"vocab", {{"max_size", cfg.vocab_max_size}}},
        {"model", model_to_json(cfg.model, cfg.d_embed)},
        {"training", training_to_json(cfg.training)},
        {"mining", {{"n_negatives", cfg.mining.n_negatives},
                    {"perc_margin", cfg.mining.perc_margin},
                    {"candidate_pool_k", cfg.mining.candidate_pool_k},
                    {"seed", cfg.mining.seed}}},
        {"pipeline", {{"k_retrieve", cfg.pipeline.k_retrieve},
                      {"k_rerank", cfg.pipeline.k_rerank},
                      {"final_k", cfg.pipeline.final_k},
                      {"use_ann", cfg.pipeline.use_ann},
                      {"n_probe", cfg.pipeline.n_probe},
                      {"label", cfg.pipeline.label}}},
        {"eval", {{"k", cfg.eval_k}}},
        {"ablation", {{"sizes", sizes}, {"attention_modes", modes}, {"losses", losses},
                      {"seeds", cfg.grid.seeds},
                      {"teacher", training_to_json(cfg.ablation.teacher_train)},
                      {"reranker_training", training_to_json(cfg.ablation.reranker_train)},
                      {"reranker_max_seq_len", cfg.ablation.reranker_max_seq_len}}},
        {"perf", {{"n_iters", cfg.perf_iters}, {"n_passages", cfg.perf_passages},
                  {"n_candidates", cfg.perf_candidates}}},
        {"serve", {{"host", cfg.service.host}, {"port", cfg.service.port},
                   {"bearer_token_env", cfg.service.bearer_token_env},
                   {"max_passages_per_request", cfg.service.max_passages_per_request},
                   {"max_text_chars", cfg.service.max_text_chars}}}};
    return cfg;
}

void require_absent(const std::string& path, bool force) {
    if (!force && fs::exists(path))
        throw std::runtime_error("refusing to overwrite existing " + path +
                                 " (pass --force to allow)");
}

void write_text(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

// Every command that consumed a config drops the resolved snapshot next to
// its primary output so runs are reproducible from artifacts alone.
void emit_snapshot(const AppConfig& cfg, const std::string& out_path, bool force) {
    fs::path p(out_path);
    fs::path snap = fs::is_directory(p) ? p / "resolved_config.json"
                                        : p.parent_path() / (p.stem().string() + ".config.json");
    if (snap.parent_path().empty()) snap = fs::path(".") / snap;
    require_absent(snap.string(), force);
    write_text(snap.string(), cfg.resolved.dump(2) + "\n");
}

std::vector<std::pair<std::string, std::vector<std::string>>>
run_to_pairs(const RetrievalRun& run) {
    std::vector<std::pair<std::string, std::vector<std::string>>> pairs;
    for (const auto& r : run.results) {
        std::vector<std::string> ids;
        for (const auto& item : r.ranked) ids.push_back(item.id);
        pairs.emplace_back(r.query_id, std::move(ids));
    }
    return pairs;
}

void log_step(int step, double loss) {
    if (step % 50 == 0 || step == 1)
        std::cerr << "step " << step << " loss " << loss << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"minirank: train, index, rerank, and serve a toy text retrieval stack"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_path, vocab_path;
    std::string embedder_path, reranker_path, index_path, mined_path, run_path, text;
    bool force = false;
    std::optional<uint64_t> seed_flag;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_flag("--force", force, "allow overwriting existing outputs");
        cmd->add_option("--seed", seed_flag, "override the config seed");
    };

    // dataset
    auto* dataset = app.add_subcommand("dataset", "create or validate datasets");
    dataset->require_subcommand(1);
    auto* synth = dataset->add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth);
    synth->add_option("--out", out_path, "output directory")->required();
    auto* validate = dataset->add_subcommand("validate", "check dataset invariants");
    validate->add_option("--data", data_dir, "dataset directory")->required();

    // vocab
    auto* vocab_cmd = app.add_subcommand("vocab", "vocabulary utilities");
    vocab_cmd->require_subcommand(1);
    auto* vocab_build = vocab_cmd->add_subcommand("build", "build a vocabulary from a dataset");
    add_common(vocab_build);
    vocab_build->add_option("--data", data_dir, "dataset directory")->required();
    vocab_build->add_option("--out", out_path, "output vocab file")->required();

    // train
    auto* train = app.add_subcommand("train", "train models");
    train->require_subcommand(1);
    auto* train_emb = train->add_subcommand("embedder", "train the bi-encoder retriever");
    add_common(train_emb);
    train_emb->add_option("--data", data_dir)->required();
    train_emb->add_option("--vocab", vocab_path)->required();
    train_emb->add_option("--mined", mined_path, "optional mined negatives JSONL");
    train_emb->add_option("--out", out_path, "output checkpoint")->required();
    auto* train_rr = train->add_subcommand("reranker", "train the cross-encoder reranker");
    add_common(train_rr);
    train_rr->add_option("--data", data_dir)->required();
    train_rr->add_option("--vocab", vocab_path)->required();
    train_rr->add_option("--mined", mined_path, "mined negatives JSONL")->required();
    train_rr->add_option("--out", out_path, "output checkpoint")->required();

    // mine
    auto* mine = app.add_subcommand("mine", "mine hard negatives with a teacher embedder");
    add_common(mine);
    mine->add_option("--data", data_dir)->required();
    mine->add_option("--vocab", vocab_path)->required();
    mine->add_option("--embedder", embedder_path, "teacher checkpoint")->required();
    mine->add_option("--index", index_path, "prebuilt index (else built in memory)");
    mine->add_option("--out", out_path, "output mined JSONL")->required();

    // index
    int n_lists = 0;
    auto* index_cmd = app.add_subcommand("index", "embed all passages and build an index");
    add_common(index_cmd);
    index_cmd->add_option("--data", data_dir)->required();
    index_cmd->add_option("--vocab", vocab_path)->required();
    index_cmd->add_option("--embedder", embedder_path)->required();
    index_cmd->add_option("--n-lists", n_lists, "also build this many ANN lists");
    index_cmd->add_option("--out", out_path, "output index file")->required();

    // query
    int query_k = 10;
    auto* query_cmd = app.add_subcommand("query", "run one query through the pipeline");
    add_common(query_cmd);
    query_cmd->add_option("--index", index_path)->required();
    query_cmd->add_option("--vocab", vocab_path)->required();
    query_cmd->add_option("--embedder", embedder_path)->required();
    query_cmd->add_option("--reranker", reranker_path, "optional reranker checkpoint");
    query_cmd->add_option("--text", text, "query text")->required();
    query_cmd->add_option("-k,--top-k", query_k, "results to return");
    query_cmd->add_option("--data", data_dir, "dataset directory (passage texts for reranking)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a saved run against qrels");
    add_common(eval_cmd);
    eval_cmd->add_option("--data", data_dir)->required();
    eval_cmd->add_option("--run", run_path, "run JSONL")->required();

    // benchmark
    std::vector<std::string> bench_embedders, bench_rerankers;
    auto* bench = app.add_subcommand("benchmark", "evaluate retriever/reranker combinations");
    add_common(bench);
    bench->add_option("--data", data_dir)->required();
    bench->add_option("--vocab", vocab_path)->required();
    bench->add_option("--embedder", bench_embedders, "label=checkpoint (repeatable)")
        ->required();
    bench->add_option("--reranker", bench_rerankers, "label=checkpoint (repeatable)");
    bench->add_option("--out", out_path, "report output path (.json; .txt twin emitted)");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "run the size/attention/loss ablation grid");
    add_common(ablate);
    ablate->add_option("--data", data_dir)->required();
    ablate->add_option("--vocab", vocab_path)->required();
    ablate->add_option("--out", out_path, "report output path (.json; .txt twin emitted)");

    // profile
    std::string large_embedder_path;
    auto* profile = app.add_subcommand("profile", "latency/throughput measurements");
    add_common(profile);
    profile->add_option("--vocab", vocab_path)->required();
    profile->add_option("--embedder", embedder_path, "embedder checkpoint");
    profile->add_option("--embedder-large", large_embedder_path,
                        "second embedder for the pipeline comparison");
    profile->add_option("--reranker", reranker_path, "reranker checkpoint");
    profile->add_option("--out", out_path, "JSON output path");

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    add_common(serve);
    serve->add_option("--vocab", vocab_path)->required();
    serve->add_option("--embedder", embedder_path, "embedder checkpoint");
    serve->add_option("--reranker", reranker_path, "reranker checkpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        AppConfig cfg = load_config(config_path);
        if (seed_flag) {
            cfg.model.seed = *seed_flag;
            cfg.training.seed = *seed_flag;
            cfg.mining.seed = *seed_flag;
            cfg.resolved["model"]["seed"] = *seed_flag;
            cfg.resolved["training"]["seed"] = *seed_flag;
            cfg.resolved["mining"]["seed"] = *seed_flag;
            cfg.resolved["dataset"]["seed"] = *seed_flag;
        }

        if (synth->parsed()) {
            require_absent((fs::path(out_path) / "corpus.jsonl").string(), force);
            Dataset ds = make_synthetic_dataset(cfg.model.seed, cfg.n_queries,
                                                cfg.n_passages);
            ds.name = cfg.dataset_name;
            save_dataset(ds, out_path);
            emit_snapshot(cfg, out_path, force);
            std::cout << "wrote " << ds.passages.size() << " passages, "
                      << ds.queries.size() << " queries to " << out_path << "\n";
        } else if (validate->parsed()) {
            Dataset ds = load_dataset(data_dir);
            auto violations = validate_dataset(ds);
            for (const auto& v : violations) std::cout << v << "\n";
            if (!violations.empty()) return kExitRuntime;
            std::cout << "ok: " << ds.passages.size() << " passages, "
                      << ds.queries.size() << " queries, "
                      << ds.qrels.judgments.size() << " judged queries\n";
        } else if (vocab_build->parsed()) {
            require_absent(out_path, force);
            Dataset ds = load_dataset(data_dir);
            Vocab vocab = build_vocab(ds, cfg.vocab_max_size);
            save_vocab(vocab, out_path);
            emit_snapshot(cfg, out_path, force);
            std::cout << "wrote vocab of " << vocab.size() << " tokens to " << out_path << "\n";
        } else if (train_emb->parsed()) {
            require_absent(out_path, force);
            Dataset ds = load_dataset(data_dir);
            Vocab vocab = load_vocab(vocab_path);
            cfg.model.vocab_size = vocab.size();
            std::vector<MinedExample> mined;
            if (!mined_path.empty()) mined = load_mined(mined_path);
            EmbedderModel model = train_biencoder(ds, mined, vocab, cfg.model,
                                                  cfg.d_embed, cfg.training, log_step);
            save_embedder(model, out_path);
            emit_snapshot(cfg, out_path, force);
            std::cout << "wrote embedder checkpoint " << out_path << " (fingerprint "
                      << embedder_fingerprint(model) << ")\n";
        } else if (train_rr->parsed()) {
            require_absent(out_path, force);
            Dataset ds = load_dataset(data_dir);
            Vocab vocab = load_vocab(vocab_path);
            cfg.model.vocab_size = vocab.size();
            std::vector<MinedExample> mined = load_mined(mined_path);
            RerankerModel model = train_reranker(ds, mined, vocab, cfg.model,
                                                 cfg.training, log_step);
            save_reranker(model, out_path);
            emit_snapshot(cfg, out_path, force);
            std::cout << "wrote reranker checkpoint " << out_path << " (fingerprint "
                      << reranker_fingerprint(model) << ")\n";
        } else if (mine->parsed()) {
            require_absent(out_path, force);
            Dataset ds = load_dataset(data_dir);
            Vocab vocab = load_vocab(vocab_path);
            EmbedderModel teacher = load_embedder(embedder_path);
            VectorIndex index = index_path.empty()
                                    ? run_indexing(ds, teacher, vocab)
                                    : load_index(index_path);
            MiningResult result = mine_negatives(teacher, vocab, index, ds, cfg.mining);
            save_mined(result.examples, out_path);
            emit_snapshot(cfg, out_path, force);
            std::cout << "mined " << result.examples.size() << " examples ("
                      << result.skipped_no_positive << " skipped without positives, "
                      << result.threshold_skipped << " without a positive-score threshold)\n";
        } else if (index_cmd->parsed()) {
            require_absent(out_path, force);
            Dataset ds = load_dataset(data_dir);
            Vocab vocab = load_vocab(vocab_path);
            EmbedderModel embedder = load_embedder(embedder_path);
            double pps = 0.0;
            VectorIndex index = run_indexing(ds, embedder, vocab, &pps);
            if (n_lists > 0) build_clusters(index, n_lists, cfg.model.seed);
            save_index(index, out_path);
            emit_snapshot(cfg, out_path, force);
            std::cout << "indexed " << index.size() << " passages at " << pps
                      << " passages/sec" << (n_lists > 0 ? " with clustering" : "") << "\n";
        } else if (query_cmd->parsed()) {
            Vocab vocab = load_vocab(vocab_path);
            EmbedderModel embedder = load_embedder(embedder_path);
            VectorIndex index = load_index(index_path);
            std::optional<RerankerModel> reranker;
            if (!reranker_path.empty()) {
                if (data_dir.empty())
                    throw UsageError("--reranker requires --data for passage texts");
                reranker = load_reranker(reranker_path);
            }
            Dataset ds;
            if (!data_dir.empty()) ds = load_dataset(data_dir);
            PipelineConfig pc = cfg.pipeline;
            pc.final_k = query_k;
            if (pc.k_retrieve < query_k) pc.k_retrieve = query_k;
            Query q{"cli", text};
            QueryResult result = run_query(index, embedder, embedder_fingerprint(embedder),
                                           vocab, pc, q, ds,
                                           reranker ? &*reranker : nullptr);
            json hits = json::array();
            for (const auto& item : result.ranked)
                hits.push_back({{"id", item.id}, {"score", item.score}});
            std::cout << json{{"query", text}, {"results", hits}}.dump(2) << "\n";
        } else if (eval_cmd->parsed()) {
            Dataset ds = load_dataset(data_dir);
            RetrievalRun run = load_run(run_path);
            RunEval eval = evaluate_run(run_to_pairs(run), ds.qrels, cfg.eval_k);
            for (const auto& v : eval.violations)
                std::cerr << "warning: query " << v << " not in qrels\n";
            std::cout << "NDCG@" << cfg.eval_k << " = " << eval.mean_ndcg << " over "
                      << eval.per_query.size() << " queries (" << eval.excluded_no_relevant
                      << " excluded without relevant passages)\n";
        } else if (bench->parsed()) {
            Dataset ds = load_dataset(data_dir);
            Vocab vocab = load_vocab(vocab_path);
            auto split_label = [](const std::string& s) {
                auto pos = s.find('=');
                if (pos == std::string::npos)
                    throw UsageError("expected label=path, got: " + s);
                return std::pair{s.substr(0, pos), s.substr(pos + 1)};
            };
            std::vector<EmbedderModel> embedders;
            std::vector<RerankerModel> rerankers;
            std::vector<std::pair<std::string, size_t>> rr_refs;
            for (const auto& spec : bench_rerankers) {
                auto [label, path] = split_label(spec);
                rerankers.push_back(load_reranker(path));
                rr_refs.emplace_back(label, rerankers.size() - 1);
            }
            std::vector<BenchmarkSpec> specs;
            for (const auto& spec : bench_embedders) {
                auto [label, path] = split_label(spec);
                embedders.push_back(load_embedder(path));
                BenchmarkSpec bs;
                bs.embedder_label = label;
                for (const auto& [rlabel, ridx] : rr_refs)
                    bs.rerankers.emplace_back(rlabel, &rerankers[ridx]);
                specs.push_back(std::move(bs));
            }
            for (size_t i = 0; i < specs.size(); ++i) specs[i].embedder = &embedders[i];

            BenchmarkResult result = run_benchmark(ds, vocab, specs, cfg.pipeline);
            for (const auto& err : result.errors) std::cerr << "error: " << err << "\n";

            EvalReport report;
            report.k = cfg.eval_k;
            report.dataset_names = {ds.name.empty() ? "dataset" : ds.name};
            for (const auto& run : result.runs) {
                RunEval eval = evaluate_run(run_to_pairs(run), ds.qrels, cfg.eval_k);
                EvalRow row;
                row.label = run.label;
                row.avg = eval.mean_ndcg;
                row.per_dataset[report.dataset_names[0]] = eval.mean_ndcg;
                report.rows.push_back(std::move(row));
            }
            std::string text_report = render_report_text(report);
            std::cout << text_report;
            if (!out_path.empty()) {
                require_absent(out_path, force);
                write_text(out_path, render_report_json(report) + "\n");
                fs::path twin = fs::path(out_path).replace_extension(".txt");
                require_absent(twin.string(), force);
                write_text(twin.string(), text_report);
                emit_snapshot(cfg, out_path, force);
            }
            if (!result.errors.empty()) return kExitRuntime;
        } else if (ablate->parsed()) {
            Dataset ds = load_dataset(data_dir);
            Vocab vocab = load_vocab(vocab_path);
            AblationSetup setup = cfg.ablation;
            setup.teacher_config.vocab_size = vocab.size();
            AblationReport report = run_ablation(
                ds, vocab, cfg.grid, setup,
                [](const std::string& msg) { std::cerr << msg << "\n"; });
            std::string text_report = render_ablation_text(report);
            std::cout << text_report;
            if (!out_path.empty()) {
                require_absent(out_path, force);
                write_text(out_path, render_ablation_json(report) + "\n");
                fs::path twin = fs::path(out_path).replace_extension(".txt");
                require_absent(twin.string(), force);
                write_text(twin.string(), text_report);
                emit_snapshot(cfg, out_path, force);
            }
        } else if (profile->parsed()) {
            Vocab vocab = load_vocab(vocab_path);
            json out = json::object();
            std::optional<PerfReport> small_idx, large_idx, rr;
            if (!embedder_path.empty()) {
                EmbedderModel embedder = load_embedder(embedder_path);
                PerfReport q = profile_query_embedding(embedder, vocab, cfg.perf_iters);
                small_idx = profile_indexing(embedder, vocab, cfg.perf_passages);
                std::cout << perf_report_text(q) << "\n"
                          << perf_report_text(*small_idx) << "\n";
                out["query_embedding"] = json::parse(perf_report_json(q));
                out["indexing"] = json::parse(perf_report_json(*small_idx));
            }
            if (!large_embedder_path.empty()) {
                EmbedderModel embedder = load_embedder(large_embedder_path);
                large_idx = profile_indexing(embedder, vocab, cfg.perf_passages);
                std::cout << perf_report_text(*large_idx) << "\n";
                out["indexing_large"] = json::parse(perf_report_json(*large_idx));
            }
            if (!reranker_path.empty()) {
                RerankerModel reranker = load_reranker(reranker_path);
                rr = profile_rerank(reranker, vocab, cfg.perf_candidates, cfg.perf_iters);
                std::cout << perf_report_text(*rr) << "\n";
                out["rerank"] = json::parse(perf_report_json(*rr));
            }
            if (small_idx && large_idx && rr) {
                PipelineComparison cmp = compare_pipelines(*small_idx, *large_idx, *rr);
                std::cout << cmp.narrative << "\n";
                out["comparison"] = {{"indexing_throughput_ratio", cmp.indexing_throughput_ratio},
                                     {"added_query_latency_ms", cmp.added_query_latency_ms},
                                     {"narrative", cmp.narrative}};
            }
            if (out.empty()) throw UsageError("profile needs --embedder and/or --reranker");
            if (!out_path.empty()) {
                require_absent(out_path, force);
                write_text(out_path, out.dump(2) + "\n");
                emit_snapshot(cfg, out_path, force);
            }
        } else if (serve->parsed()) {
            Vocab vocab = load_vocab(vocab_path);
            std::optional<EmbedderModel> embedder;
            std::optional<RerankerModel> reranker;
            if (!embedder_path.empty()) embedder = load_embedder(embedder_path);
            if (!reranker_path.empty()) reranker = load_reranker(reranker_path);
            if (!embedder && !reranker)
                throw UsageError("serve needs --embedder and/or --reranker");
            RetrievalService service(cfg.service, std::move(vocab), std::move(embedder),
                                     std::move(reranker));
            std::cout << "serving on " << cfg.service.host << ":" << cfg.service.port << "\n";
            service.run();  // blocks
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
