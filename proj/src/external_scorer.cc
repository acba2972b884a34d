// Copyright 2026 The KART Harness Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kart/external_scorer.h"

#include <chrono>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "kart/error.h"

namespace kart {

using Json = nlohmann::ordered_json;

class ExternalScorer::Transport {
 public:
  Transport(const std::string& endpoint, const ExternalScorerOptions& options)
      : client_(endpoint), retries_(options.retries) {
    if (!client_.is_valid()) {
      throw Error(ErrorKind::kConfiguration, fmt::format("cannot use endpoint '{}'", endpoint));
    }
    const auto timeout = std::chrono::duration<double>(options.timeout_seconds);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout).count();
    client_.set_connection_timeout(usec / 1000000, usec % 1000000);
    client_.set_read_timeout(usec / 1000000, usec % 1000000);
    client_.set_write_timeout(usec / 1000000, usec % 1000000);
  }

  Json Get(const std::string& path) { return Send("GET", path, ""); }
  Json Post(const std::string& path, const std::string& body) { return Send("POST", path, body); }

 private:
  Json Send(const std::string& method, const std::string& path, const std::string& body) {
    std::lock_guard<std::mutex> lock(mu_);
    for (int attempt = 0;; ++attempt) {
      try {
        return SendOnce(method, path, body);
      } catch (const Error& e) {
        if (!e.retryable() || attempt >= retries_) throw;
        spdlog::info("retrying {} {} after transport failure: {}", method, path, e.what());
        std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
      }
    }
  }

  Json SendOnce(const std::string& method, const std::string& path, const std::string& body) {
    const httplib::Headers headers = {{std::string(protocol::kHeader), std::to_string(protocol::kVersion)}};
    httplib::Result res = method == "GET" ? client_.Get(path, headers)
                                          : client_.Post(path, headers, body, "application/json");
    if (!res) {
      throw Error(ErrorKind::kTransport,
                  fmt::format("{} {}: {}", method, path, httplib::to_string(res.error())));
    }
    if (res->status >= 500) {
      throw Error(ErrorKind::kTransport, fmt::format("{} {}: HTTP {}", method, path, res->status));
    }
    const std::string version = res->get_header_value(std::string(protocol::kHeader));
    if (version != std::to_string(protocol::kVersion)) {
      throw Error(ErrorKind::kProtocol,
                  fmt::format("{} {}: server speaks protocol '{}', expected {}", method, path,
                              version.empty() ? "none" : version, protocol::kVersion));
    }
    Json j;
    try {
      j = Json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kProtocol, fmt::format("{} {}: response is not JSON", method, path));
    }
    if (res->status != 200) {
      const std::string message = j.is_object() ? j.value("error", std::string("unknown error")) : "";
      throw Error(ErrorKind::kProtocol,
                  fmt::format("{} {}: HTTP {}: {}", method, path, res->status, message));
    }
    return j;
  }

  httplib::Client client_;
  int retries_;
  std::mutex mu_;
};

ExternalScorer::ExternalScorer(std::string endpoint, ExternalScorerOptions options)
    : endpoint_(std::move(endpoint)),
      options_(options),
      transport_(std::make_unique<Transport>(endpoint_, options_)) {}

ExternalScorer::~ExternalScorer() = default;

std::unique_ptr<ExternalScorer> ExternalScorer::Connect(const std::string& endpoint,
                                                        ExternalScorerOptions options) {
  std::unique_ptr<ExternalScorer> s(new ExternalScorer(endpoint, options));
  const Json health = s->transport_->Get("/health");
  try {
    if (health.at("status").get<std::string>() != "ok") {
      throw Error(ErrorKind::kProtocol, fmt::format("{} reports status '{}'", endpoint,
                                                    health.at("status").get<std::string>()));
    }
    if (health.value("protocol", protocol::kVersion) != protocol::kVersion) {
      throw Error(ErrorKind::kProtocol, fmt::format("{} speaks protocol {}", endpoint,
                                                    health.at("protocol").dump()));
    }
    s->provenance_.model_id = health.at("model_id").get<std::string>();
    s->provenance_.config.model_kind = ModelKind::kExternal;
    s->provenance_.training_mode = "external";
    s->provenance_.anonymizer.clear();
    if (auto p = health.find("provenance"); p != health.end() && p->is_object()) {
      s->provenance_.anonymizer = p->value("anonymizer", std::string());
      s->provenance_.corpus_hash = p->value("corpus_hash", std::string());
    }
    if (auto c = health.find("capabilities"); c != health.end() && c->is_object()) {
      s->caps_.full_vocab = c->value("full_vocab", true);
      s->caps_.embeddings = c->value("embeddings", false);
      s->caps_.embedding_dim = c->value("embedding_dim", size_t{0});
    }
    s->server_tokens_ = s->transport_->Get("/vocab").at("tokens").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, fmt::format("{}: malformed handshake: {}", endpoint, e.what()));
  }

  Vocabulary specials;
  std::vector<std::string> tokens = specials.tokens();
  std::set<std::string> seen(tokens.begin(), tokens.end());
  for (const std::string& t : s->server_tokens_) {
    if (seen.insert(t).second) tokens.push_back(t);
  }
  s->vocab_ = std::make_shared<const Vocabulary>(std::move(tokens));
  return s;
}

std::vector<std::vector<double>> ExternalScorer::Score(
    std::span<const TokenId> ids, std::span<const size_t> mask_positions,
    std::span<const std::vector<TokenId>> candidates) const {
  protocol::ScoreRequest req;
  for (TokenId id : ids) req.tokens.push_back(vocab_->Token(id));
  req.mask_positions.assign(mask_positions.begin(), mask_positions.end());
  for (size_t i = 0; i < mask_positions.size(); ++i) {
    if (candidates[i].empty()) {
      req.candidates[mask_positions[i]] = FullVocab{};
      continue;
    }
    std::vector<std::string> list;
    for (TokenId c : candidates[i]) list.push_back(vocab_->Token(c));
    req.candidates[mask_positions[i]] = std::move(list);
  }
  const protocol::ScoreResponse resp =
      protocol::ScoreResponseFromJson(transport_->Post("/score", protocol::ToJson(req).dump()));
  if (resp.log_probs.size() != mask_positions.size()) {
    throw Error(ErrorKind::kProtocol,
                fmt::format("score response covers {} positions, expected {}", resp.log_probs.size(),
                            mask_positions.size()));
  }

  std::vector<std::vector<double>> out;
  for (size_t i = 0; i < mask_positions.size(); ++i) {
    auto it = resp.log_probs.find(mask_positions[i]);
    if (it == resp.log_probs.end()) {
      throw Error(ErrorKind::kProtocol,
                  fmt::format("score response lacks position {}", mask_positions[i]));
    }
    std::unordered_map<std::string_view, double> by_token;
    for (const auto& [token, lp] : it->second) by_token.emplace(token, lp);
    std::vector<double> row;
    if (candidates[i].empty()) {
      // Local specials the server does not know get zero probability.
      for (const std::string& t : vocab_->tokens()) {
        auto f = by_token.find(t);
        row.push_back(f == by_token.end() ? -std::numeric_limits<double>::infinity() : f->second);
      }
    } else {
      for (TokenId c : candidates[i]) {
        auto f = by_token.find(vocab_->Token(c));
        if (f == by_token.end()) {
          throw Error(ErrorKind::kProtocol,
                      fmt::format("score response lacks candidate '{}'", vocab_->Token(c)));
        }
        row.push_back(f->second);
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<float> ExternalScorer::Embedding(TokenId id) const {
  if (!caps_.embeddings) return ScorerModel::Embedding(id);
  const std::string& token = vocab_->Token(id);
  const Json j = transport_->Get("/embeddings?tokens=" + httplib::detail::encode_query_param(token));
  try {
    std::vector<float> v = j.at("embeddings").at(token).get<std::vector<float>>();
    if (v.size() != caps_.embedding_dim) {
      throw Error(ErrorKind::kProtocol,
                  fmt::format("embedding of '{}' has {} values, expected {}", token, v.size(),
                              caps_.embedding_dim));
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, fmt::format("malformed embeddings response: {}", e.what()));
  }
}

}  // namespace kart
