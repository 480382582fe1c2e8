#include "sumlens/remote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "httplib.h"
#include "json.hpp"
#include "sumlens/error.hpp"

namespace sumlens {

using nlohmann::json;

namespace {

json spans_json(const std::vector<Span>& spans) {
  json out = json::array();
  for (const Span& s : spans) out.push_back({s.begin, s.end});
  return out;
}

std::vector<Span> spans_from(const json& j) {
  std::vector<Span> out;
  for (const auto& s : j) out.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
  return out;
}

struct DecodedRequest {
  AblationConfig config;
  Document doc;
  Prefix prefix;
};

DecodedRequest decode_request(const std::string& body, const Vocab& vocab) {
  const json j = json::parse(body);
  if (j.at("version").get<int>() != kRemoteProtocolVersion) throw ProtocolError("protocol version mismatch");
  AblationConfig config;
  config.mode = parse_ablation_mode(j.at("config").get<std::string>());
  if (!j.at("visible").is_null()) config.visible_pieces = j.at("visible").get<std::vector<std::size_t>>();
  DocumentParts parts;
  parts.id = j.value("doc_id", "");
  parts.pieces = j.at("pieces").get<std::vector<TokenId>>();
  for (TokenId id : parts.pieces) {
    if (!vocab.in_range(id)) throw VocabError("request piece outside the vocabulary");
    parts.piece_text.push_back(vocab.token(id));
  }
  parts.word_spans = spans_from(j.at("word_spans"));
  parts.sentence_spans = spans_from(j.at("sentence_spans"));
  return {std::move(config), Document(std::move(parts)), Prefix(j.at("prefix").get<std::vector<TokenId>>(), vocab)};
}

}  // namespace

std::string encode_predict_request(const AblationConfig& config, const Document& doc, const Prefix& prefix) {
  json j = {
      {"version", kRemoteProtocolVersion},
      {"config", std::string(to_string(config.mode))},
      {"doc_id", doc.id()},
      {"pieces", doc.pieces()},
      {"word_spans", spans_json(doc.word_spans())},
      {"sentence_spans", spans_json(doc.sentence_spans())},
      {"visible", config.visible_pieces ? json(*config.visible_pieces) : json(nullptr)},
      {"prefix", prefix.pieces()},
  };
  return j.dump();
}

std::string encode_predict_response(const TokenDistribution& dist, std::size_t top_k) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto probs = dist.probs();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  const std::size_t keep = top_k > 0 ? std::min(top_k, order.size()) : order.size();
  json list = json::array();
  double listed = 0.0;
  for (std::size_t k = 0; k < keep; ++k) {
    if (top_k == 0 && probs[order[k]] == 0.0) continue;
    list.push_back({{"id", order[k]}, {"p", probs[order[k]]}});
    listed += probs[order[k]];
  }
  const double residual = keep < order.size() ? std::max(0.0, 1.0 - listed) : 0.0;
  return json{{"version", kRemoteProtocolVersion}, {"probs", list}, {"residual", residual}}.dump();
}

TokenDistribution decode_predict_response(std::string_view body, std::size_t vocab_size) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  try {
    std::vector<double> probs(vocab_size, 0.0);
    std::vector<bool> listed(vocab_size, false);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& e : j.at("probs")) {
      const auto id = e.at("id").get<long long>();
      const double p = e.at("p").get<double>();
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) throw ProtocolError("token id out of range");
      if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError("probability outside [0,1]");
      if (listed[static_cast<std::size_t>(id)]) throw ProtocolError("duplicate token id");
      listed[static_cast<std::size_t>(id)] = true;
      probs[static_cast<std::size_t>(id)] = p;
      total += p;
      ++count;
    }
    const double residual = j.value("residual", 0.0);
    if (!(residual >= 0.0 && residual <= 1.0)) throw ProtocolError("residual outside [0,1]");
    if (std::abs(total + residual - 1.0) > kSimplexTolerance) throw ProtocolError("listed mass plus residual is not 1");
    const bool truncated = residual > 0.0;
    if (truncated) {
      const std::size_t unlisted = vocab_size - count;
      if (unlisted == 0) throw ProtocolError("residual mass with every token listed");
      for (std::size_t i = 0; i < vocab_size; ++i) {
        if (!listed[i]) probs[i] = residual / static_cast<double>(unlisted);
      }
    }
    TokenDistribution dist(std::move(probs));
    if (truncated) dist.set_truncation(static_cast<int>(count), true);
    return dist;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  } catch (const VocabError& e) {
    throw ProtocolError(e.what());
  }
}

RemoteBackend::RemoteBackend(std::string endpoint, Vocab vocab, RemoteOptions opts)
    : endpoint_(std::move(endpoint)), vocab_(std::move(vocab)), opts_(opts) {
  if (endpoint_.rfind("http://", 0) != 0) throw ConfigError("remote endpoint must start with http://");
}

RemoteBackend::~RemoteBackend() = default;

std::unique_ptr<httplib::Client> RemoteBackend::acquire() const {
  {
    std::lock_guard lock(pool_mutex_);
    if (!pool_.empty()) {
      auto c = std::move(pool_.back());
      pool_.pop_back();
      return c;
    }
  }
  auto c = std::make_unique<httplib::Client>(endpoint_);
  const auto us = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout).count();
  c->set_connection_timeout(us / 1000000, us % 1000000);
  c->set_read_timeout(us / 1000000, us % 1000000);
  c->set_write_timeout(us / 1000000, us % 1000000);
  c->set_keep_alive(true);
  return c;
}

void RemoteBackend::release(std::unique_ptr<httplib::Client> client) const {
  std::lock_guard lock(pool_mutex_);
  if (pool_.size() < opts_.max_idle_connections) pool_.push_back(std::move(client));
}

TokenDistribution RemoteBackend::do_predict(const AblationConfig& config, const Document& doc,
                                            const Prefix& prefix) const {
  auto client = acquire();
  const auto res = client->Post("/predict", encode_predict_request(config, doc, prefix), "application/json");
  if (!res) throw BackendUnavailable(endpoint_ + ": " + httplib::to_string(res.error()));
  if (res->status == 503) throw BackendUnavailable(endpoint_ + " returned 503");
  if (res->status != 200) throw ProtocolError(endpoint_ + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
  release(std::move(client));
  return decode_predict_response(res->body, vocab_.size());
}

LocalServer::LocalServer(const Backend& backend, ServeOptions opts) : server_(std::make_unique<httplib::Server>()) {
  server_->Post("/predict", [&backend, opts](const httplib::Request& req, httplib::Response& res) {
    if (opts.delay.count() > 0) std::this_thread::sleep_for(opts.delay);
    try {
      const auto r = decode_request(req.body, backend.vocab());
      const auto dist = backend.predict_next(r.config, r.doc, r.prefix);
      res.set_content(encode_predict_response(dist, opts.top_k), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ < 0) throw BackendUnavailable("could not bind a local port");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

LocalServer::~LocalServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace sumlens
