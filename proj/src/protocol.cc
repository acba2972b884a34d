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

#include "kart/protocol.h"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "kart/error.h"

namespace kart::protocol {
namespace {

using Json = nlohmann::ordered_json;

size_t ParsePosition(const std::string& key) {
  size_t pos = 0;
  size_t used = 0;
  try {
    pos = std::stoul(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != key.size()) {
    throw Error(ErrorKind::kValidation, fmt::format("'{}' is not a token position", key));
  }
  return pos;
}

template <typename F>
auto Guard(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, fmt::format("malformed protocol message: {}", e.what()));
  }
}

}  // namespace

Json ToJson(const ScoreRequest& r) {
  Json j;
  j["tokens"] = r.tokens;
  j["mask_positions"] = r.mask_positions;
  Json c = Json::object();
  for (const auto& [pos, set] : r.candidates) {
    if (std::holds_alternative<FullVocab>(set)) {
      c[std::to_string(pos)] = kFullVocab;
    } else {
      c[std::to_string(pos)] = std::get<std::vector<std::string>>(set);
    }
  }
  j["candidates"] = std::move(c);
  return j;
}

ScoreRequest ScoreRequestFromJson(const Json& j) {
  return Guard([&] {
    ScoreRequest r;
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const Json& p : j.at("mask_positions")) {
      if (!p.is_number_integer() || p.get<int64_t>() < 0) {
        throw Error(ErrorKind::kValidation, "mask positions must be non-negative integers");
      }
      r.mask_positions.push_back(p.get<size_t>());
    }
    if (auto it = j.find("candidates"); it != j.end() && !it->is_null()) {
      for (const auto& [key, value] : it->items()) {
        const size_t pos = ParsePosition(key);
        if (value.is_string()) {
          if (value.get<std::string>() != kFullVocab) {
            throw Error(ErrorKind::kValidation,
                        fmt::format("candidates for {} must be a list or \"{}\"", key, kFullVocab));
          }
          r.candidates[pos] = FullVocab{};
        } else {
          r.candidates[pos] = value.get<std::vector<std::string>>();
        }
      }
    }
    return r;
  });
}

Json ToJson(const ScoreResponse& r) {
  Json lp = Json::object();
  for (const auto& [pos, row] : r.log_probs) {
    Json m = Json::object();
    for (const auto& [token, v] : row) m[token] = std::isfinite(v) ? Json(v) : Json(nullptr);
    lp[std::to_string(pos)] = std::move(m);
  }
  return Json{{"log_probs", std::move(lp)}, {"model_id", r.model_id}};
}

ScoreResponse ScoreResponseFromJson(const Json& j) {
  try {
    ScoreResponse r;
    r.model_id = j.value("model_id", std::string());
    for (const auto& [key, row] : j.at("log_probs").items()) {
      auto& out = r.log_probs[ParsePosition(key)];
      for (const auto& [token, v] : row.items()) {
        out.emplace_back(token, v.is_null() ? -std::numeric_limits<double>::infinity()
                                            : v.get<double>());
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, fmt::format("malformed score response: {}", e.what()));
  } catch (const Error& e) {
    throw Error(ErrorKind::kProtocol, e.what());
  }
}

Json HealthJson(const ScorerModel& model) {
  const ModelProvenance& p = model.provenance();
  return Json{{"status", "ok"},
              {"model_id", p.model_id},
              {"protocol", kVersion},
              {"capabilities",
               {{"full_vocab", model.supports_full_vocab()},
                {"embeddings", model.has_embeddings()},
                {"embedding_dim", model.embedding_dim()}}},
              {"provenance",
               {{"kind", std::string(ModelKindName(model.kind()))},
                {"anonymizer", p.anonymizer},
                {"corpus_hash", p.corpus_hash}}}};
}

Json VocabJson(const ScorerModel& model) { return Json{{"tokens", model.vocabulary().tokens()}}; }

std::vector<std::string> SplitTokensParam(std::string_view value) {
  std::vector<std::string> out;
  if (value.empty()) return out;
  size_t start = 0;
  while (true) {
    const size_t comma = value.find(',', start);
    out.emplace_back(value.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Json EmbeddingsJson(const ScorerModel& model, std::string_view tokens_param) {
  const auto vectors = ExportEmbeddings(model, SplitTokensParam(tokens_param));
  Json e = Json::object();
  for (const auto& [token, v] : vectors) e[token] = v;
  return Json{{"dim", model.embedding_dim()}, {"embeddings", std::move(e)}};
}

Json HandleScore(const ScorerModel& model, const Json& body) {
  const ScoreRequest req = ScoreRequestFromJson(body);
  const ScoreResult result = ScoreMasked(model, req.tokens, req.mask_positions, req.candidates);
  ScoreResponse resp;
  resp.model_id = model.provenance().model_id;
  for (const auto& [pos, scores] : result) {
    auto& row = resp.log_probs[pos];
    row.reserve(scores.tokens.size());
    for (size_t i = 0; i < scores.tokens.size(); ++i) row.emplace_back(scores.tokens[i], scores.log_probs[i]);
  }
  return ToJson(resp);
}

}  // namespace kart::protocol
