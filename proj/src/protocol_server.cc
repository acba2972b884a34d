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

#include "kart/protocol_server.h"

#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "kart/error.h"
#include "kart/protocol.h"

namespace kart {

using Json = nlohmann::ordered_json;

class ProtocolServer::Impl {
 public:
  explicit Impl(const ScorerModel& model) : model_(model) {
    server_.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header(std::string(protocol::kHeader), std::to_string(protocol::kVersion));
    });
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      Reply(res, [&] { return protocol::HealthJson(model_); });
    });
    server_.Get("/vocab", [this](const httplib::Request&, httplib::Response& res) {
      Reply(res, [&] { return protocol::VocabJson(model_); });
    });
    server_.Get("/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      Reply(res, [&] { return protocol::EmbeddingsJson(model_, req.get_param_value("tokens")); });
    });
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      Reply(res, [&] {
        Json body;
        try {
          body = Json::parse(req.body);
        } catch (const nlohmann::json::exception&) {
          throw Error(ErrorKind::kValidation, "request body is not JSON");
        }
        return protocol::HandleScore(model_, body);
      });
    });
  }

  int Bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }

  void Start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void Stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  template <typename F>
  void Reply(httplib::Response& res, F&& f) {
    try {
      res.set_content(f().dump(), "application/json");
    } catch (const Error& e) {
      const bool client_error = e.kind() == ErrorKind::kValidation ||
                                e.kind() == ErrorKind::kUnknownToken ||
                                e.kind() == ErrorKind::kConfiguration ||
                                e.kind() == ErrorKind::kUnsupported;
      res.status = client_error ? 400 : 500;
      res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  const ScorerModel& model_;
  httplib::Server server_;
  std::thread thread_;
};

ProtocolServer::ProtocolServer(const ScorerModel& model, std::string host, int port)
    : impl_(std::make_unique<Impl>(model)), host_(std::move(host)) {
  port_ = impl_->Bind(host_, port);
  if (port_ <= 0) throw Error(ErrorKind::kIo, fmt::format("cannot bind {}:{}", host_, port));
  impl_->Start();
  spdlog::debug("protocol server listening on {}", endpoint());
}

ProtocolServer::~ProtocolServer() { Stop(); }

std::string ProtocolServer::endpoint() const { return fmt::format("http://{}:{}", host_, port_); }

void ProtocolServer::Stop() {
  if (impl_) impl_->Stop();
}

}  // namespace kart
