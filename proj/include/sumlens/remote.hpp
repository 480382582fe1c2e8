#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sumlens/backend.hpp"

namespace httplib {
class Client;
class Server;
}  // namespace httplib

namespace sumlens {

inline constexpr int kRemoteProtocolVersion = 1;

// Request/response bodies for POST /predict.
std::string encode_predict_request(const AblationConfig& config, const Document& doc, const Prefix& prefix);
// Lists every nonzero entry, or only the top `top_k` (with the rest as `residual`) when top_k > 0.
std::string encode_predict_response(const TokenDistribution& dist, std::size_t top_k);
// Rebuilds a full distribution; a truncated payload's residual is spread uniformly
// over the unlisted ids and the result is flagged. Throws ProtocolError.
TokenDistribution decode_predict_response(std::string_view body, std::size_t vocab_size);

struct RemoteOptions {
  std::chrono::milliseconds timeout{5000};
  std::size_t max_idle_connections = 4;
};

// Client for a model served over the JSON protocol. Thread-safe; keeps a small
// pool of keep-alive connections.
class RemoteBackend final : public Backend {
 public:
  // `endpoint` is "http://host:port".
  RemoteBackend(std::string endpoint, Vocab vocab, RemoteOptions opts = {});
  ~RemoteBackend() override;

  const Vocab& vocab() const override { return vocab_; }
  std::string name() const override { return "remote:" + endpoint_; }
  const std::string& endpoint() const { return endpoint_; }

 protected:
  TokenDistribution do_predict(const AblationConfig& config, const Document& doc, const Prefix& prefix) const override;

 private:
  std::unique_ptr<httplib::Client> acquire() const;
  void release(std::unique_ptr<httplib::Client> client) const;

  std::string endpoint_;
  Vocab vocab_;
  RemoteOptions opts_;
  mutable std::mutex pool_mutex_;
  mutable std::vector<std::unique_ptr<httplib::Client>> pool_;
};

struct ServeOptions {
  std::size_t top_k = 0;                    // 0 sends full distributions
  std::chrono::milliseconds delay{0};       // artificial latency, for timeout tests
};

// Serves `backend` on 127.0.0.1 from a background thread until destroyed.
class LocalServer {
 public:
  LocalServer(const Backend& backend, ServeOptions opts = {});
  ~LocalServer();
  LocalServer(const LocalServer&) = delete;
  LocalServer& operator=(const LocalServer&) = delete;

  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace sumlens
