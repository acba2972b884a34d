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

#ifndef KART_EXTERNAL_SCORER_H_
#define KART_EXTERNAL_SCORER_H_

#include <memory>
#include <string>

#include "kart/protocol.h"
#include "kart/scorer.h"

namespace kart {

struct ExternalScorerOptions {
  double timeout_seconds = 30.0;
  // Extra attempts after a transport failure.
  int retries = 2;
};

// ScorerModel that delegates to a protocol-1 endpoint. Local token ids are
// the five specials followed by the server vocabulary in server order.
class ExternalScorer final : public ScorerModel {
 public:
  ~ExternalScorer() override;

  // Performs the /health handshake and fetches /vocab. Throws kProtocol on a
  // version mismatch and kTransport (retryable) when the endpoint cannot be
  // reached.
  static std::unique_ptr<ExternalScorer> Connect(const std::string& endpoint,
                                                 ExternalScorerOptions options = {});

  ModelKind kind() const override { return ModelKind::kExternal; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  const ModelProvenance& provenance() const override { return provenance_; }
  bool supports_full_vocab() const override { return caps_.full_vocab; }
  bool has_embeddings() const override { return caps_.embeddings; }
  size_t embedding_dim() const override { return caps_.embedding_dim; }
  std::vector<std::vector<double>> Score(
      std::span<const TokenId> ids, std::span<const size_t> mask_positions,
      std::span<const std::vector<TokenId>> candidates) const override;
  std::vector<float> Embedding(TokenId id) const override;

  const std::vector<std::string>& server_tokens() const { return server_tokens_; }
  const std::string& endpoint() const { return endpoint_; }

 private:
  class Transport;
  ExternalScorer(std::string endpoint, ExternalScorerOptions options);

  std::string endpoint_;
  ExternalScorerOptions options_;
  std::unique_ptr<Transport> transport_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<std::string> server_tokens_;
  ModelProvenance provenance_;
  protocol::Capabilities caps_;
};

}  // namespace kart

#endif  // KART_EXTERNAL_SCORER_H_
