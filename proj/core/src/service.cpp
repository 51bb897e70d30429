#include "minirank/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>

namespace minirank {

namespace {

using nlohmann::json;

void error_response(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

} // namespace

RetrievalService::RetrievalService(ServiceConfig config, Vocab vocab,
                                   std::optional<EmbedderModel> embedder,
                                   std::optional<RerankerModel> reranker)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      embedder_(std::move(embedder)),
      reranker_(std::move(reranker)),
      server_(std::make_unique<httplib::Server>()) {
    register_routes();
}

RetrievalService::~RetrievalService() { stop(); }

void RetrievalService::register_routes() {
    auto check_auth = [this](const httplib::Request& req, httplib::Response& res) {
        if (config_.bearer_token_env.empty()) return true;
        const char* token = std::getenv(config_.bearer_token_env.c_str());
        if (!token || !*token) return true;  // no token configured in environment
        std::string expected = std::string("Bearer ") + token;
        if (req.get_header_value("Authorization") == expected) return true;
        error_response(res, 401, "unauthorized");
        return false;
    };

    server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        json models = json::object();
        if (embedder_)
            models["embedder"] = std::to_string(embedder_fingerprint(*embedder_));
        if (reranker_)
            models["reranker"] = std::to_string(reranker_fingerprint(*reranker_));
        res.set_content(json{{"status", "ok"}, {"models", models}}.dump(),
                        "application/json");
    });

    server_->Post("/v1/embeddings", [this, check_auth](const httplib::Request& req,
                                                       httplib::Response& res) {
        if (!check_auth(req, res)) return;
        if (!embedder_) return error_response(res, 400, "no embedding model loaded");
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            return error_response(res, 400, std::string("malformed JSON: ") + e.what());
        }
        if (!body.contains("input")) return error_response(res, 400, "missing 'input'");

        std::vector<std::string> inputs;
        if (body.at("input").is_string()) {
            inputs.push_back(body.at("input").get<std::string>());
        } else if (body.at("input").is_array()) {
            for (const auto& item : body.at("input")) {
                if (!item.is_string()) return error_response(res, 400, "'input' items must be strings");
                inputs.push_back(item.get<std::string>());
            }
        } else {
            return error_response(res, 400, "'input' must be a string or array of strings");
        }
        if (static_cast<int>(inputs.size()) > config_.max_passages_per_request)
            return error_response(res, 413, "too many inputs");
        for (const auto& text : inputs)
            if (static_cast<int>(text.size()) > config_.max_text_chars)
                return error_response(res, 413, "input text too long");

        json data = json::array();
        for (size_t i = 0; i < inputs.size(); ++i) {
            Eigen::VectorXd v = embed(*embedder_, vocab_, inputs[i]);
            data.push_back({{"index", i},
                            {"embedding", std::vector<double>(v.data(), v.data() + v.size())}});
        }
        res.set_content(json{{"data", data}, {"model", "minirank-embedder"}}.dump(),
                        "application/json");
    });

    server_->Post("/v1/ranking", [this, check_auth](const httplib::Request& req,
                                                    httplib::Response& res) {
        if (!check_auth(req, res)) return;
        if (!reranker_) return error_response(res, 400, "no ranking model loaded");
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            return error_response(res, 400, std::string("malformed JSON: ") + e.what());
        }
        if (!body.contains("query") || !body.at("query").contains("text"))
            return error_response(res, 400, "missing 'query.text'");
        if (!body.contains("passages") || !body.at("passages").is_array())
            return error_response(res, 400, "missing 'passages' array");

        std::string query = body.at("query").at("text").get<std::string>();
        if (static_cast<int>(query.size()) > config_.max_text_chars)
            return error_response(res, 413, "query text too long");
        if (static_cast<int>(body.at("passages").size()) > config_.max_passages_per_request)
            return error_response(res, 413, "too many passages");

        std::vector<std::string> passages;
        for (const auto& p : body.at("passages")) {
            if (!p.contains("text") || !p.at("text").is_string())
                return error_response(res, 400, "each passage needs a 'text' field");
            std::string text = p.at("text").get<std::string>();
            if (static_cast<int>(text.size()) > config_.max_text_chars)
                return error_response(res, 413, "passage text too long");
            passages.push_back(std::move(text));
        }

        size_t top_n = passages.size();
        if (body.contains("top_n")) {
            long v = body.at("top_n").get<long>();
            if (v < 1) return error_response(res, 400, "'top_n' must be >= 1");
            top_n = std::min<size_t>(static_cast<size_t>(v), passages.size());
        }

        std::vector<double> logits = score_batch(*reranker_, vocab_, query, passages);
        std::vector<size_t> order(passages.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (logits[a] != logits[b]) return logits[a] > logits[b];
            return a < b;
        });

        json rankings = json::array();
        for (size_t i = 0; i < top_n; ++i)
            rankings.push_back({{"index", order[i]}, {"logit", logits[order[i]]}});
        res.set_content(json{{"rankings", rankings}}.dump(), "application/json");
    });
}

int RetrievalService::start() {
    if (config_.port == 0) {
        bound_port_ = server_->bind_to_any_port(config_.host);
        if (bound_port_ <= 0) throw std::runtime_error("failed to bind service port");
    } else {
        if (!server_->bind_to_port(config_.host, config_.port))
            throw std::runtime_error("failed to bind port " + std::to_string(config_.port));
        bound_port_ = config_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound_port_;
}

void RetrievalService::stop() {
    if (server_ && server_->is_running()) server_->stop();
    if (thread_.joinable()) thread_.join();
}

bool RetrievalService::running() const { return server_ && server_->is_running(); }

void RetrievalService::run() {
    if (!server_->bind_to_port(config_.host, config_.port))
        throw std::runtime_error("failed to bind port " + std::to_string(config_.port));
    bound_port_ = config_.port;
    server_->listen_after_bind();
}

} // namespace minirank
