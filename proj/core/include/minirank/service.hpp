#pragma once

#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "minirank/biencoder.hpp"
#include "minirank/crossencoder.hpp"
#include "minirank/tokenizer.hpp"

namespace httplib {
class Server;
}

namespace minirank {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;                 // 0 picks a free port
    std::string bearer_token_env;    // optional auth token env var
    int max_passages_per_request = 512;
    int max_text_chars = 16384;
};

/// HTTP serving layer: POST /v1/embeddings, POST /v1/ranking, GET /health.
/// Models are loaded read-only before the port opens; requests are handled
/// concurrently.
class RetrievalService {
public:
    RetrievalService(ServiceConfig config, Vocab vocab,
                     std::optional<EmbedderModel> embedder,
                     std::optional<RerankerModel> reranker);
    ~RetrievalService();

    RetrievalService(const RetrievalService&) = delete;
    RetrievalService& operator=(const RetrievalService&) = delete;

    /// Binds and starts serving on a background thread. Returns the bound port.
    int start();
    void stop();
    bool running() const;

    /// Blocking variant for the CLI.
    void run();

private:
    void register_routes();

    ServiceConfig config_;
    Vocab vocab_;
    std::optional<EmbedderModel> embedder_;
    std::optional<RerankerModel> reranker_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int bound_port_ = 0;
};

} // namespace minirank
