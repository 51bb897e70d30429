#include "minirank/biencoder.hpp"

#include "minirank/util.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace minirank {

EmbedderModel init_embedder(const ModelConfig& config, int d_embed) {
    if (d_embed < 1) throw std::invalid_argument("d_embed must be >= 1");
    EmbedderModel m;
    m.config = config;
    m.config.attention_mode = AttentionMode::kBidirectional;
    m.backbone = init_params(m.config);
    Rng rng(config.seed ^ 0x5a5a5a5aull);
    m.projection.resize(config.d_model, d_embed);
    double std_dev = 1.0 / std::sqrt(static_cast<double>(config.d_model));
    for (long i = 0; i < m.projection.size(); ++i)
        m.projection.data()[i] = rng.next_normal() * std_dev;
    return m;
}

namespace {

Eigen::VectorXd embed_pooled(const EmbedderModel& model, const Eigen::VectorXd& pooled) {
    Eigen::VectorXd u = model.projection.transpose() * pooled;
    double norm = u.norm();
    if (norm < 1e-12) return Eigen::VectorXd::Zero(u.size());
    return u / norm;
}

} // namespace

Eigen::VectorXd embed(const EmbedderModel& model, const Vocab& vocab,
                      const std::string& text) {
    TokenSeq seq = encode(vocab, text, model.config.max_seq_len);
    ForwardResult fw = forward(model.backbone, model.config, seq, /*training=*/false);
    return embed_pooled(model, fw.pooled);
}

Eigen::VectorXd embed_query(const EmbedderModel& model, const Vocab& vocab,
                            const std::string& text) {
    return embed(model, vocab,
                 model.query_prefix.empty() ? text : model.query_prefix + " " + text);
}

Eigen::VectorXd embed_passage(const EmbedderModel& model, const Vocab& vocab,
                              const std::string& text) {
    return embed(model, vocab,
                 model.passage_prefix.empty() ? text : model.passage_prefix + " " + text);
}

namespace {

struct EmbedTrace {
    ForwardResult fw;             // training-mode forward (trace kept)
    Eigen::VectorXd u;            // pre-normalization projection output
    Eigen::VectorXd e;            // unit embedding
};

EmbedTrace embed_with_trace(const EmbedderModel& model, const Vocab& vocab,
                            const std::string& text) {
    EmbedTrace t;
    TokenSeq seq = encode(vocab, text, model.config.max_seq_len);
    t.fw = forward(model.backbone, model.config, seq, /*training=*/true);
    t.u = model.projection.transpose() * t.fw.pooled;
    double norm = t.u.norm();
    t.e = norm < 1e-12 ? Eigen::VectorXd::Zero(t.u.size()) : Eigen::VectorXd(t.u / norm);
    return t;
}

// Backpropagates de (gradient w.r.t. the unit embedding) into backbone and
// projection gradients.
void backprop_embedding(const EmbedderModel& model, const EmbedTrace& t,
                        const Eigen::VectorXd& de, ParameterSet& backbone_grads,
                        Eigen::MatrixXd& proj_grads) {
    double norm = t.u.norm();
    if (norm < 1e-12) return;
    Eigen::VectorXd du = (de - t.e * t.e.dot(de)) / norm;
    proj_grads += t.fw.pooled * du.transpose();
    Eigen::VectorXd dpooled = model.projection * du;
    ParameterSet bb = backward(*t.fw.trace, model.backbone, model.config, dpooled);
    axpy(backbone_grads, bb, 1.0);
}

} // namespace

EmbedderModel train_biencoder(const Dataset& dataset, const std::vector<MinedExample>& mined,
                              const Vocab& vocab, const ModelConfig& model_config,
                              int d_embed, const TrainConfig& train_config,
                              const std::function<void(int, double)>& on_step) {
    std::unordered_map<std::string, const Passage*> by_id;
    for (const auto& p : dataset.passages) by_id[p.id] = &p;
    std::unordered_map<std::string, const Query*> q_by_id;
    for (const auto& q : dataset.queries) q_by_id[q.id] = &q;

    // (query text, positive text, hard negative texts)
    struct TrainRow {
        std::string query, positive;
        std::vector<std::string> hard_negatives;
    };
    std::vector<TrainRow> rows;
    if (!mined.empty()) {
        for (const auto& ex : mined) {
            auto qit = q_by_id.find(ex.query_id);
            auto pit = by_id.find(ex.positive_id);
            if (qit == q_by_id.end() || pit == by_id.end()) continue;
            TrainRow row{qit->second->text, pit->second->text, {}};
            int n = std::min<int>(train_config.n_negatives,
                                  static_cast<int>(ex.negative_ids.size()));
            for (int i = 0; i < n; ++i) {
                auto nit = by_id.find(ex.negative_ids[static_cast<size_t>(i)]);
                if (nit != by_id.end()) row.hard_negatives.push_back(nit->second->text);
            }
            rows.push_back(std::move(row));
        }
    } else {
        // in-batch-only mode: every judged (query, positive) pair
        for (const auto& [qid, judged] : dataset.qrels.judgments) {
            auto qit = q_by_id.find(qid);
            if (qit == q_by_id.end()) continue;
            for (const auto& [pid, grade] : judged) {
                if (grade <= 0) continue;
                auto pit = by_id.find(pid);
                if (pit != by_id.end())
                    rows.push_back({qit->second->text, pit->second->text, {}});
            }
        }
    }
    if (rows.empty()) throw std::invalid_argument("empty training set");

    ModelConfig cfg = model_config;
    cfg.seed = train_config.seed;
    cfg.attention_mode = AttentionMode::kBidirectional;
    EmbedderModel model = init_embedder(cfg, d_embed);

    long n_backbone = num_params(model.backbone);
    size_t n_total = static_cast<size_t>(n_backbone + model.projection.size());
    AdamOptimizer opt(n_total, train_config.learning_rate, train_config.weight_decay,
                      train_config.steps, train_config.warmup_fraction);

    auto flatten_model = [&]() {
        std::vector<double> flat = flatten(model.backbone);
        flat.insert(flat.end(), model.projection.data(),
                    model.projection.data() + model.projection.size());
        return flat;
    };
    auto unflatten_model = [&](const std::vector<double>& flat) {
        std::vector<double> bb(flat.begin(), flat.begin() + n_backbone);
        unflatten(bb, model.backbone);
        std::copy(flat.begin() + n_backbone, flat.end(), model.projection.data());
    };

    std::vector<double> flat = flatten_model();
    Rng rng(train_config.seed + 2);
    const double tau = train_config.tau;

    for (int step = 0; step < train_config.steps; ++step) {
        std::vector<const TrainRow*> batch;
        for (int b = 0; b < train_config.batch_size; ++b)
            batch.push_back(&rows[rng.next_below(rows.size())]);

        const size_t b_sz = batch.size();
        std::vector<EmbedTrace> q_traces;
        std::vector<EmbedTrace> c_traces;          // candidates: positives then hard negs
        std::vector<long> pos_index(b_sz);         // candidate index of each query's positive
        for (size_t i = 0; i < b_sz; ++i) q_traces.push_back(embed_with_trace(model, vocab, batch[i]->query));
        for (size_t i = 0; i < b_sz; ++i) {
            pos_index[i] = static_cast<long>(c_traces.size());
            c_traces.push_back(embed_with_trace(model, vocab, batch[i]->positive));
        }
        for (size_t i = 0; i < b_sz; ++i)
            for (const auto& neg : batch[i]->hard_negatives)
                c_traces.push_back(embed_with_trace(model, vocab, neg));

        const long m_cand = static_cast<long>(c_traces.size());
        Eigen::MatrixXd qe(static_cast<long>(b_sz), d_embed);
        Eigen::MatrixXd ce(m_cand, d_embed);
        for (size_t i = 0; i < b_sz; ++i) qe.row(static_cast<long>(i)) = q_traces[i].e;
        for (long c = 0; c < m_cand; ++c) ce.row(c) = c_traces[static_cast<size_t>(c)].e;

        // softmax over temperature-scaled cosine scores, per query
        Eigen::MatrixXd logits = (qe * ce.transpose()) / tau;  // [B x M]
        double loss = 0.0;
        Eigen::MatrixXd dlogits(static_cast<long>(b_sz), m_cand);
        for (long i = 0; i < static_cast<long>(b_sz); ++i) {
            double mx = logits.row(i).maxCoeff();
            Eigen::ArrayXd ex = (logits.row(i).array() - mx).exp();
            double denom = ex.sum();
            loss += -(logits(i, pos_index[static_cast<size_t>(i)]) - mx - std::log(denom));
            dlogits.row(i) = (ex / denom).matrix();
            dlogits(i, pos_index[static_cast<size_t>(i)]) -= 1.0;
        }
        loss /= static_cast<double>(b_sz);
        dlogits /= (tau * static_cast<double>(b_sz));

        Eigen::MatrixXd dqe = dlogits * ce;              // [B x d_embed]
        Eigen::MatrixXd dce = dlogits.transpose() * qe;  // [M x d_embed]

        ParameterSet backbone_grads = zeros_like(model.backbone);
        Eigen::MatrixXd proj_grads = Eigen::MatrixXd::Zero(model.projection.rows(),
                                                           model.projection.cols());
        for (size_t i = 0; i < b_sz; ++i)
            backprop_embedding(model, q_traces[i], dqe.row(static_cast<long>(i)).transpose(),
                               backbone_grads, proj_grads);
        for (long c = 0; c < m_cand; ++c)
            backprop_embedding(model, c_traces[static_cast<size_t>(c)],
                               dce.row(c).transpose(), backbone_grads, proj_grads);

        std::vector<double> grad_flat = flatten(backbone_grads);
        grad_flat.insert(grad_flat.end(), proj_grads.data(),
                         proj_grads.data() + proj_grads.size());
        opt.step(flat, grad_flat);
        unflatten_model(flat);
        if (on_step) on_step(step, loss);
    }
    return model;
}

void save_embedder(const EmbedderModel& model, const std::string& path) {
    Checkpoint ckpt;
    ckpt.config = model.config;
    ckpt.params = model.backbone;
    ckpt.extra["projection"] = model.projection;
    save_checkpoint(ckpt, path);
}

EmbedderModel load_embedder(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    if (!ckpt.extra.count("projection"))
        throw std::runtime_error("checkpoint is not an embedder (missing projection): " + path);
    EmbedderModel m;
    m.config = ckpt.config;
    m.backbone = std::move(ckpt.params);
    m.projection = ckpt.extra.at("projection");
    return m;
}

uint64_t embedder_fingerprint(const EmbedderModel& model) {
    Checkpoint ckpt;
    ckpt.config = model.config;
    ckpt.params = model.backbone;
    ckpt.extra["projection"] = model.projection;
    return checkpoint_fingerprint(ckpt);
}

} // namespace minirank
