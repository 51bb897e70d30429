#include "minirank/transformer.hpp"

#include "minirank/util.hpp"

#include <cmath>
#include <stdexcept>

namespace minirank {

namespace {

constexpr double kNormEps = 1e-6;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
           x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Row-wise RMS normalization: out_i = gain .* x_i * inv_i.
void rmsnorm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gain,
             Eigen::MatrixXd& out, Eigen::VectorXd& inv) {
    const long n = x.rows(), d = x.cols();
    out.resize(n, d);
    inv.resize(n);
    for (long i = 0; i < n; ++i) {
        double ms = x.row(i).squaredNorm() / static_cast<double>(d);
        inv(i) = 1.0 / std::sqrt(ms + kNormEps);
        out.row(i) = x.row(i).cwiseProduct(gain.transpose()) * inv(i);
    }
}

// Backward of rmsnorm. Accumulates gain gradient, returns input gradient.
Eigen::MatrixXd rmsnorm_backward(const Eigen::MatrixXd& x, const Eigen::VectorXd& inv,
                                 const Eigen::VectorXd& gain, const Eigen::MatrixXd& dout,
                                 Eigen::VectorXd& dgain) {
    const long n = x.rows(), d = x.cols();
    Eigen::MatrixXd dx(n, d);
    for (long i = 0; i < n; ++i) {
        Eigen::RowVectorXd gdy = dout.row(i).cwiseProduct(gain.transpose());
        double dot = gdy.dot(x.row(i));
        double r = inv(i);
        dx.row(i) = gdy * r - x.row(i) * (r * r * r * dot / static_cast<double>(d));
        dgain += (dout.row(i).cwiseProduct(x.row(i)) * r).transpose();
    }
    return dx;
}

struct LayerTrace {
    Eigen::MatrixXd x_in;
    Eigen::MatrixXd xn1;
    Eigen::VectorXd inv1;
    Eigen::MatrixXd q, k, v;
    std::vector<Eigen::MatrixXd> probs;  // per head [T x T]
    Eigen::MatrixXd o_concat;
    Eigen::MatrixXd x_mid;
    Eigen::MatrixXd xn2;
    Eigen::VectorXd inv2;
    Eigen::MatrixXd h1;  // pre-activation [T x d_ff]
    Eigen::MatrixXd g;   // gelu(h1)
    Eigen::MatrixXd x_out;
};

} // namespace

struct ForwardTrace {
    std::vector<int> token_ids;
    std::vector<bool> keep;
    std::vector<LayerTrace> layers;
    std::vector<Eigen::MatrixXd> layer_outputs;
    Eigen::MatrixXd x0;
    Eigen::MatrixXd pre_final;
    Eigen::VectorXd final_inv;
    long n_keep = 0;
};

std::string to_string(AttentionMode mode) {
    return mode == AttentionMode::kCausal ? "causal" : "bidirectional";
}

AttentionMode attention_mode_from_string(const std::string& s) {
    if (s == "causal") return AttentionMode::kCausal;
    if (s == "bidirectional") return AttentionMode::kBidirectional;
    throw std::invalid_argument("unknown attention mode: " + s);
}

void ModelConfig::validate() const {
    if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
    if (d_model < 1) throw std::invalid_argument("d_model must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0)
        throw std::invalid_argument("d_model must be divisible by n_heads");
    if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
    if (d_ff < 1) throw std::invalid_argument("d_ff must be >= 1");
    if (max_seq_len < 4) throw std::invalid_argument("max_seq_len must be >= 4");
}

std::vector<TensorRef> tensor_refs(ParameterSet& p) {
    std::vector<TensorRef> refs;
    auto add_m = [&](const std::string& name, Eigen::MatrixXd& m) {
        refs.push_back({name, m.data(), m.rows(), m.cols()});
    };
    auto add_v = [&](const std::string& name, Eigen::VectorXd& v) {
        refs.push_back({name, v.data(), v.size(), 1});
    };
    add_m("tok_emb", p.token_embedding);
    add_m("pos_emb", p.pos_embedding);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        std::string pre = "layer" + std::to_string(l) + ".";
        LayerParams& lp = p.layers[l];
        add_m(pre + "wq", lp.wq);
        add_m(pre + "wk", lp.wk);
        add_m(pre + "wv", lp.wv);
        add_m(pre + "wo", lp.wo);
        add_m(pre + "w1", lp.w1);
        add_v(pre + "b1", lp.b1);
        add_m(pre + "w2", lp.w2);
        add_v(pre + "b2", lp.b2);
        add_v(pre + "norm1", lp.norm1_gain);
        add_v(pre + "norm2", lp.norm2_gain);
    }
    add_v("final_norm", p.final_norm_gain);
    return refs;
}

std::vector<TensorRef> tensor_refs(const ParameterSet& p) {
    return tensor_refs(const_cast<ParameterSet&>(p));
}

ParameterSet init_params(const ModelConfig& config) {
    config.validate();
    ParameterSet p;
    double std_dev = 1.0 / std::sqrt(static_cast<double>(config.d_model));
    p.token_embedding.resize(config.vocab_size, config.d_model);
    p.pos_embedding.resize(config.max_seq_len, config.d_model);
    p.layers.resize(static_cast<size_t>(config.n_layers));
    for (auto& lp : p.layers) {
        lp.wq.resize(config.d_model, config.d_model);
        lp.wk.resize(config.d_model, config.d_model);
        lp.wv.resize(config.d_model, config.d_model);
        lp.wo.resize(config.d_model, config.d_model);
        lp.w1.resize(config.d_model, config.d_ff);
        lp.b1 = Eigen::VectorXd::Zero(config.d_ff);
        lp.w2.resize(config.d_ff, config.d_model);
        lp.b2 = Eigen::VectorXd::Zero(config.d_model);
        lp.norm1_gain = Eigen::VectorXd::Ones(config.d_model);
        lp.norm2_gain = Eigen::VectorXd::Ones(config.d_model);
    }
    p.final_norm_gain = Eigen::VectorXd::Ones(config.d_model);

    Rng rng(config.seed);
    for (auto& ref : tensor_refs(p)) {
        // gains stay 1, biases stay 0
        if (ref.name.find("norm") != std::string::npos ||
            ref.name.find(".b") != std::string::npos)
            continue;
        for (long i = 0; i < ref.size(); ++i) ref.data[i] = rng.next_normal() * std_dev;
    }
    return p;
}

ParameterSet zeros_like(const ParameterSet& params) {
    ParameterSet z = params;
    for (auto& ref : tensor_refs(z))
        for (long i = 0; i < ref.size(); ++i) ref.data[i] = 0.0;
    return z;
}

long num_params(const ParameterSet& params) {
    long n = 0;
    for (const auto& ref : tensor_refs(params)) n += ref.size();
    return n;
}

std::vector<double> flatten(const ParameterSet& params) {
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(num_params(params)));
    for (const auto& ref : tensor_refs(params))
        flat.insert(flat.end(), ref.data, ref.data + ref.size());
    return flat;
}

void unflatten(const std::vector<double>& flat, ParameterSet& params) {
    size_t off = 0;
    for (auto& ref : tensor_refs(params)) {
        if (off + static_cast<size_t>(ref.size()) > flat.size())
            throw std::invalid_argument("flat vector too short");
        std::copy(flat.begin() + static_cast<long>(off),
                  flat.begin() + static_cast<long>(off) + ref.size(), ref.data);
        off += static_cast<size_t>(ref.size());
    }
    if (off != flat.size()) throw std::invalid_argument("flat vector size mismatch");
}

void axpy(ParameterSet& acc, const ParameterSet& other, double s) {
    auto a = tensor_refs(acc);
    auto b = tensor_refs(other);
    if (a.size() != b.size()) throw std::invalid_argument("parameter shape mismatch");
    for (size_t t = 0; t < a.size(); ++t) {
        if (a[t].size() != b[t].size()) throw std::invalid_argument("tensor shape mismatch");
        for (long i = 0; i < a[t].size(); ++i) a[t].data[i] += s * b[t].data[i];
    }
}

void scale_params(ParameterSet& params, double s) {
    for (auto& ref : tensor_refs(params))
        for (long i = 0; i < ref.size(); ++i) ref.data[i] *= s;
}

ForwardResult forward(const ParameterSet& params, const ModelConfig& config,
                      const TokenSeq& tokens, bool training) {
    const long t_len = static_cast<long>(tokens.ids.size());
    if (t_len > config.max_seq_len)
        throw std::invalid_argument("token sequence longer than max_seq_len");
    if (t_len == 0) throw std::invalid_argument("empty token sequence");
    for (int id : tokens.ids)
        if (id < 0 || id >= config.vocab_size)
            throw std::out_of_range("token id out of vocab range");

    const int d = config.d_model;
    const int n_heads = config.n_heads;
    const int dh = config.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool causal = config.attention_mode == AttentionMode::kCausal;

    auto trace = std::make_shared<ForwardTrace>();
    trace->token_ids = tokens.ids;
    trace->keep = tokens.attention_keep;

    Eigen::MatrixXd x(t_len, d);
    for (long i = 0; i < t_len; ++i)
        x.row(i) = params.token_embedding.row(tokens.ids[static_cast<size_t>(i)]) +
                   params.pos_embedding.row(i);
    trace->x0 = x;

    for (int l = 0; l < config.n_layers; ++l) {
        const LayerParams& lp = params.layers[static_cast<size_t>(l)];
        LayerTrace lt;
        lt.x_in = x;

        rmsnorm(x, lp.norm1_gain, lt.xn1, lt.inv1);
        lt.q = lt.xn1 * lp.wq;
        lt.k = lt.xn1 * lp.wk;
        lt.v = lt.xn1 * lp.wv;

        lt.o_concat.resize(t_len, d);
        lt.probs.resize(static_cast<size_t>(n_heads));
        for (int h = 0; h < n_heads; ++h) {
            auto qh = lt.q.middleCols(h * dh, dh);
            auto kh = lt.k.middleCols(h * dh, dh);
            auto vh = lt.v.middleCols(h * dh, dh);
            Eigen::MatrixXd scores = qh * kh.transpose() * inv_sqrt_dh;
            Eigen::MatrixXd& p = lt.probs[static_cast<size_t>(h)];
            p = Eigen::MatrixXd::Zero(t_len, t_len);
            for (long i = 0; i < t_len; ++i) {
                const long j_max = causal ? i : t_len - 1;
                double row_max = -std::numeric_limits<double>::infinity();
                for (long j = 0; j <= j_max; ++j)
                    if (tokens.attention_keep[static_cast<size_t>(j)])
                        row_max = std::max(row_max, scores(i, j));
                if (!std::isfinite(row_max)) continue;  // fully masked row -> zero output
                double denom = 0.0;
                for (long j = 0; j <= j_max; ++j) {
                    if (!tokens.attention_keep[static_cast<size_t>(j)]) continue;
                    double e = std::exp(scores(i, j) - row_max);
                    p(i, j) = e;
                    denom += e;
                }
                p.row(i) /= denom;
            }
            lt.o_concat.middleCols(h * dh, dh) = p * vh;
        }
        lt.x_mid = x + lt.o_concat * lp.wo;

        rmsnorm(lt.x_mid, lp.norm2_gain, lt.xn2, lt.inv2);
        lt.h1 = (lt.xn2 * lp.w1).rowwise() + lp.b1.transpose();
        lt.g = lt.h1.unaryExpr([](double v) { return gelu(v); });
        lt.x_out = lt.x_mid + ((lt.g * lp.w2).rowwise() + lp.b2.transpose());

        x = lt.x_out;
        if (training) {
            trace->layer_outputs.push_back(x);
            trace->layers.push_back(std::move(lt));
        }
    }

    trace->pre_final = x;
    ForwardResult result;
    rmsnorm(x, params.final_norm_gain, result.hidden, trace->final_inv);

    result.pooled = Eigen::VectorXd::Zero(d);
    long n_keep = 0;
    for (long i = 0; i < t_len; ++i) {
        if (!tokens.attention_keep[static_cast<size_t>(i)]) continue;
        result.pooled += result.hidden.row(i).transpose();
        ++n_keep;
    }
    if (n_keep == 0) throw std::invalid_argument("no kept positions to pool over");
    result.pooled /= static_cast<double>(n_keep);
    trace->n_keep = n_keep;

    if (training) result.trace = trace;
    return result;
}

const std::vector<Eigen::MatrixXd>& layer_outputs(const ForwardTrace& trace) {
    return trace.layer_outputs;
}

ParameterSet backward(const ForwardTrace& trace, const ParameterSet& params,
                      const ModelConfig& config, const Eigen::VectorXd& pooled_grad) {
    if (trace.layers.empty() && config.n_layers > 0)
        throw std::invalid_argument("backward requires a training-mode forward trace");

    const long t_len = static_cast<long>(trace.token_ids.size());
    const int d = config.d_model;
    const int n_heads = config.n_heads;
    const int dh = config.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    ParameterSet grads = zeros_like(params);

    // pooling backward
    Eigen::MatrixXd dhidden = Eigen::MatrixXd::Zero(t_len, d);
    for (long i = 0; i < t_len; ++i)
        if (trace.keep[static_cast<size_t>(i)])
            dhidden.row(i) = pooled_grad.transpose() / static_cast<double>(trace.n_keep);

    // final norm backward
    Eigen::MatrixXd dx = rmsnorm_backward(trace.pre_final, trace.final_inv,
                                          params.final_norm_gain, dhidden,
                                          grads.final_norm_gain);

    for (int l = config.n_layers - 1; l >= 0; --l) {
        const LayerTrace& lt = trace.layers[static_cast<size_t>(l)];
        const LayerParams& lp = params.layers[static_cast<size_t>(l)];
        LayerParams& gl = grads.layers[static_cast<size_t>(l)];

        // FFN block: x_out = x_mid + gelu(xn2 w1 + b1) w2 + b2
        Eigen::MatrixXd dg = dx * lp.w2.transpose();
        gl.w2 += lt.g.transpose() * dx;
        gl.b2 += dx.colwise().sum().transpose();
        Eigen::MatrixXd dh1 = dg.cwiseProduct(lt.h1.unaryExpr([](double v) { return gelu_grad(v); }));
        Eigen::MatrixXd dxn2 = dh1 * lp.w1.transpose();
        gl.w1 += lt.xn2.transpose() * dh1;
        gl.b1 += dh1.colwise().sum().transpose();
        Eigen::MatrixXd dx_mid =
            dx + rmsnorm_backward(lt.x_mid, lt.inv2, lp.norm2_gain, dxn2, gl.norm2_gain);

        // attention block: x_mid = x_in + o_concat wo
        Eigen::MatrixXd do_concat = dx_mid * lp.wo.transpose();
        gl.wo += lt.o_concat.transpose() * dx_mid;

        Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(t_len, d);
        Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(t_len, d);
        Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(t_len, d);
        for (int h = 0; h < n_heads; ++h) {
            auto qh = lt.q.middleCols(h * dh, dh);
            auto kh = lt.k.middleCols(h * dh, dh);
            auto vh = lt.v.middleCols(h * dh, dh);
            const Eigen::MatrixXd& p = lt.probs[static_cast<size_t>(h)];
            Eigen::MatrixXd doh = do_concat.middleCols(h * dh, dh);
            Eigen::MatrixXd dp = doh * vh.transpose();
            dv.middleCols(h * dh, dh) = p.transpose() * doh;
            // softmax backward, row-wise; zero rows stay zero
            Eigen::MatrixXd ds(t_len, t_len);
            for (long i = 0; i < t_len; ++i) {
                double dot = p.row(i).dot(dp.row(i));
                ds.row(i) = p.row(i).cwiseProduct((dp.row(i).array() - dot).matrix());
            }
            dq.middleCols(h * dh, dh) = ds * kh * inv_sqrt_dh;
            dk.middleCols(h * dh, dh) = ds.transpose() * qh * inv_sqrt_dh;
        }
        gl.wq += lt.xn1.transpose() * dq;
        gl.wk += lt.xn1.transpose() * dk;
        gl.wv += lt.xn1.transpose() * dv;
        Eigen::MatrixXd dxn1 =
            dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
        dx = dx_mid + rmsnorm_backward(lt.x_in, lt.inv1, lp.norm1_gain, dxn1, gl.norm1_gain);
    }

    for (long i = 0; i < t_len; ++i) {
        grads.token_embedding.row(trace.token_ids[static_cast<size_t>(i)]) += dx.row(i);
        grads.pos_embedding.row(i) += dx.row(i);
    }
    return grads;
}

std::pair<ParameterSet, ModelConfig> prune_bottom_layers(const ParameterSet& params,
                                                         const ModelConfig& config, int k) {
    if (k < 1 || k > config.n_layers)
        throw std::invalid_argument("k must be in [1, n_layers]");
    ParameterSet pruned;
    pruned.token_embedding = params.token_embedding;
    pruned.pos_embedding = params.pos_embedding;
    pruned.layers.assign(params.layers.begin(), params.layers.begin() + k);
    pruned.final_norm_gain = params.final_norm_gain;
    ModelConfig cfg = config;
    cfg.n_layers = k;
    return {std::move(pruned), cfg};
}

} // namespace minirank
