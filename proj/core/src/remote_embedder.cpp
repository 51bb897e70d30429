#include "minirank/remote_embedder.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace minirank {

namespace {

using nlohmann::json;

std::vector<Eigen::VectorXd> embed_chunk(httplib::Client& client,
                                         const RemoteEmbedderConfig& cfg,
                                         const std::vector<std::string>& chunk) {
    json body{{"model", cfg.model_name}, {"input", chunk}};
    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 1; attempt <= cfg.max_retries; ++attempt) {
        auto res = client.Post("/v1/embeddings", headers, body.dump(), "application/json");
        if (res && res->status == 200) {
            json parsed = json::parse(res->body);
            if (!parsed.contains("data") || !parsed.at("data").is_array())
                throw std::runtime_error("embedding response missing 'data' array");
            std::vector<Eigen::VectorXd> out(chunk.size());
            std::vector<bool> filled(chunk.size(), false);
            long dim = -1;
            for (const auto& item : parsed.at("data")) {
                size_t idx = item.at("index").get<size_t>();
                if (idx >= chunk.size())
                    throw std::runtime_error("embedding response index out of range");
                std::vector<double> vals = item.at("embedding").get<std::vector<double>>();
                if (dim < 0) dim = static_cast<long>(vals.size());
                if (static_cast<long>(vals.size()) != dim)
                    throw std::runtime_error("embedding dimension mismatch within batch");
                Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(vals.data(),
                                                                static_cast<long>(vals.size()));
                double norm = v.norm();
                out[idx] = norm > 0 ? Eigen::VectorXd(v / norm) : v;
                filled[idx] = true;
            }
            for (bool f : filled)
                if (!f) throw std::runtime_error("embedding response missing entries");
            return out;
        }
        last_error = res ? "HTTP status " + std::to_string(res->status)
                         : "transport error " + httplib::to_string(res.error());
        if (attempt < cfg.max_retries)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    }
    throw std::runtime_error("remote embedding failed after " +
                             std::to_string(cfg.max_retries) + " attempts: " + last_error);
}

} // namespace

std::vector<Eigen::VectorXd> remote_embed(const RemoteEmbedderConfig& cfg,
                                          const std::vector<std::string>& texts) {
    if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    std::vector<Eigen::VectorXd> out;
    if (texts.empty()) return out;  // zero requests issued

    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(cfg.timeout_seconds);
    client.set_read_timeout(cfg.timeout_seconds);

    for (size_t off = 0; off < texts.size(); off += static_cast<size_t>(cfg.batch_size)) {
        size_t end = std::min(texts.size(), off + static_cast<size_t>(cfg.batch_size));
        std::vector<std::string> chunk(texts.begin() + static_cast<long>(off),
                                       texts.begin() + static_cast<long>(end));
        auto vecs = embed_chunk(client, cfg, chunk);
        out.insert(out.end(), vecs.begin(), vecs.end());
    }
    return out;
}

} // namespace minirank
