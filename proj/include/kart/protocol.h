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

#ifndef KART_PROTOCOL_H_
#define KART_PROTOCOL_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kart/scorer.h"

// HTTP/JSON scorer protocol, version 1. Every response carries the header
// X-KART-Protocol: 1.
//   GET  /health                -> {"status":"ok","model_id":...,"protocol":1,
//                                   "capabilities":{...},"provenance":{...}}
//   GET  /vocab                 -> {"tokens":[...]}
//   GET  /embeddings?tokens=a,b -> {"dim":d,"embeddings":{"a":[...],...}}
//   POST /score                 -> ScoreResponse for a ScoreRequest body
// Errors are {"error": message} with status 400 (bad request) or 500.
namespace kart::protocol {

inline constexpr std::string_view kHeader = "X-KART-Protocol";
inline constexpr int kVersion = 1;
inline constexpr std::string_view kFullVocab = "full_vocab";

struct ScoreRequest {
  std::vector<std::string> tokens;
  std::vector<size_t> mask_positions;
  // Positions without an entry are scored over the full vocabulary.
  std::map<size_t, CandidateSet> candidates;

  bool operator==(const ScoreRequest&) const = default;
};

struct ScoreResponse {
  // Per position: (token, log-probability) in request order.
  std::map<size_t, std::vector<std::pair<std::string, double>>> log_probs;
  std::string model_id;

  bool operator==(const ScoreResponse&) const = default;
};

struct Capabilities {
  bool full_vocab = true;
  bool embeddings = false;
  size_t embedding_dim = 0;
};

nlohmann::ordered_json ToJson(const ScoreRequest& request);
ScoreRequest ScoreRequestFromJson(const nlohmann::ordered_json& j);
nlohmann::ordered_json ToJson(const ScoreResponse& response);
ScoreResponse ScoreResponseFromJson(const nlohmann::ordered_json& j);

// Server-side handlers shared by every backend that serves a ScorerModel.
// They throw kart::Error; kValidation/kUnknownToken/kConfiguration map to
// HTTP 400.
nlohmann::ordered_json HealthJson(const ScorerModel& model);
nlohmann::ordered_json VocabJson(const ScorerModel& model);
nlohmann::ordered_json EmbeddingsJson(const ScorerModel& model, std::string_view tokens_param);
nlohmann::ordered_json HandleScore(const ScorerModel& model, const nlohmann::ordered_json& body);

// Splits the /embeddings query value on commas.
std::vector<std::string> SplitTokensParam(std::string_view value);

}  // namespace kart::protocol

#endif  // KART_PROTOCOL_H_
