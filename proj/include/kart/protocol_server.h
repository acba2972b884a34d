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

#ifndef KART_PROTOCOL_SERVER_H_
#define KART_PROTOCOL_SERVER_H_

#include <memory>
#include <string>

#include "kart/scorer.h"

namespace kart {

// Serves a ScorerModel over protocol 1 on a background thread. Used for
// conformance checks and for exposing harness models to external tools.
class ProtocolServer {
 public:
  // Binds to host:port; port 0 picks a free port.
  ProtocolServer(const ScorerModel& model, std::string host = "127.0.0.1", int port = 0);
  ~ProtocolServer();

  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;

  int port() const { return port_; }
  std::string endpoint() const;
  void Stop();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
};

}  // namespace kart

#endif  // KART_PROTOCOL_SERVER_H_
