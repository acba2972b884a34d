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

#include "kart/scorer.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "kart/error.h"

namespace kart {
namespace {

constexpr std::array<std::string_view, 4> kModelKindNames = {"count_nb", "tiny_mlm", "external",
                                                             "uniform"};

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  return kModelKindNames[static_cast<size_t>(kind)];
}

std::optional<ModelKind> ParseModelKind(std::string_view name) {
  for (size_t i = 0; i < kModelKindNames.size(); ++i) {
    if (kModelKindNames[i] == name) return static_cast<ModelKind>(i);
  }
  return std::nullopt;
}

void TrainingConfig::Validate() const {
  auto fail = [](std::string_view field, auto value) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("training config: {} must be positive (got {})", field, value));
  };
  if (max_sequence_length < 3) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("training config: max_sequence_length must be at least 3 (got {})",
                            max_sequence_length));
  }
  if (!(learning_rate > 0.0)) fail("learning_rate", learning_rate);
  if (batch_size <= 0) fail("batch_size", batch_size);
  if (steps < 0) fail("steps", steps);
  if (embedding_dim <= 0) fail("embedding_dim", embedding_dim);
  if (!(smoothing_k > 0.0)) fail("smoothing_k", smoothing_k);
  if (!(mask_rate > 0.0) || mask_rate > 1.0) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("training config: mask_rate must lie in (0, 1] (got {})", mask_rate));
  }
  if (model_kind == ModelKind::kTinyMlm && embedding_dim < 2) {
    throw Error(ErrorKind::kConfiguration, "training config: tiny_mlm needs embedding_dim >= 2");
  }
}

std::vector<float> ScorerModel::Embedding(TokenId) const {
  throw Error(ErrorKind::kUnsupported,
              fmt::format("{} models do not expose embeddings", ModelKindName(kind())));
}

std::vector<ParamArray> ScorerModel::ExportParams() const {
  throw Error(ErrorKind::kUnsupported,
              fmt::format("{} models cannot be saved", ModelKindName(kind())));
}

UniformScorer::UniformScorer(std::shared_ptr<const Vocabulary> vocab) : vocab_(std::move(vocab)) {
  provenance_.model_id = fmt::format("uniform-{}", vocab_->size());
  provenance_.config.model_kind = ModelKind::kUniform;
  provenance_.trained = false;
  provenance_.anonymizer.clear();  // never saw training text
}

std::vector<std::vector<double>> UniformScorer::Score(
    std::span<const TokenId>, std::span<const size_t> mask_positions,
    std::span<const std::vector<TokenId>> candidates) const {
  const double lp = -std::log(static_cast<double>(vocab_->size()));
  std::vector<std::vector<double>> out;
  for (size_t i = 0; i < mask_positions.size(); ++i) {
    const size_t n = candidates[i].empty() ? vocab_->size() : candidates[i].size();
    out.emplace_back(n, lp);
  }
  return out;
}

ScoreResult ScoreMasked(const ScorerModel& model, const std::vector<std::string>& tokens,
                        const std::vector<size_t>& mask_positions,
                        const std::map<size_t, CandidateSet>& candidates) {
  const Vocabulary& vocab = model.vocabulary();
  std::set<size_t> seen;
  for (size_t pos : mask_positions) {
    if (pos >= tokens.size()) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("mask position {} outside sequence of length {}", pos, tokens.size()));
    }
    if (tokens[pos] != kMaskToken) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("position {} holds '{}' instead of {}", pos, tokens[pos], kMaskToken));
    }
    if (!seen.insert(pos).second) {
      throw Error(ErrorKind::kValidation, fmt::format("mask position {} listed twice", pos));
    }
  }
  for (const auto& [pos, set] : candidates) {
    if (!seen.contains(pos)) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("candidates given for unmasked position {}", pos));
    }
  }

  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(vocab.IdOrUnk(t));

  std::vector<std::vector<TokenId>> cand_ids(mask_positions.size());
  std::vector<std::vector<std::string>> cand_tokens(mask_positions.size());
  for (size_t i = 0; i < mask_positions.size(); ++i) {
    auto it = candidates.find(mask_positions[i]);
    if (it == candidates.end() || std::holds_alternative<FullVocab>(it->second)) {
      if (!model.supports_full_vocab()) {
        throw Error(ErrorKind::kUnsupported,
                    fmt::format("{} scorer cannot return full-vocabulary distributions",
                                ModelKindName(model.kind())));
      }
      cand_tokens[i] = vocab.tokens();
      continue;
    }
    const auto& list = std::get<std::vector<std::string>>(it->second);
    if (list.empty()) {
      throw Error(ErrorKind::kConfiguration,
                  fmt::format("empty candidate list at position {}", mask_positions[i]));
    }
    for (const std::string& c : list) {
      auto id = vocab.Find(c);
      if (!id) {
        throw Error(ErrorKind::kUnknownToken,
                    fmt::format("candidate '{}' at position {} is not in the model vocabulary", c,
                                mask_positions[i]));
      }
      cand_ids[i].push_back(*id);
    }
    cand_tokens[i] = list;
  }

  auto rows = model.Score(ids, mask_positions, cand_ids);
  ScoreResult result;
  for (size_t i = 0; i < mask_positions.size(); ++i) {
    result[mask_positions[i]] = PositionScores{std::move(cand_tokens[i]), std::move(rows[i])};
  }
  return result;
}

std::map<std::string, std::vector<float>> ExportEmbeddings(const ScorerModel& model,
                                                           const std::vector<std::string>& tokens) {
  std::map<std::string, std::vector<float>> out;
  if (!model.has_embeddings()) {
    throw Error(ErrorKind::kUnsupported,
                fmt::format("{} models do not expose embeddings", ModelKindName(model.kind())));
  }
  for (const std::string& t : tokens) {
    auto id = model.vocabulary().Find(t);
    if (!id) {
      throw Error(ErrorKind::kUnknownToken, fmt::format("token '{}' is not in the vocabulary", t));
    }
    out[t] = model.Embedding(*id);
  }
  return out;
}

std::vector<TokenId> EncodeText(std::string_view text, const Tokenizer& tokenizer,
                                const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const TokenPiece& p : tokenizer.Tokenize(text)) {
    if (IsPlaceholderToken(p.text)) continue;
    ids.push_back(vocab.IdOrUnk(p.text));
  }
  return ids;
}

std::vector<std::vector<TokenId>> SegmentCorpus(const Corpus& corpus, const Tokenizer& tokenizer,
                                                const Vocabulary& vocab, int max_sequence_length) {
  const size_t body = static_cast<size_t>(max_sequence_length) - 2;
  std::vector<std::vector<TokenId>> segments;
  for (const Document& doc : corpus.documents) {
    const std::vector<TokenId> ids = EncodeText(doc.text, tokenizer, vocab);
    for (size_t start = 0; start < ids.size(); start += body) {
      const size_t end = std::min(ids.size(), start + body);
      std::vector<TokenId> seg;
      seg.reserve(end - start + 2);
      seg.push_back(Vocabulary::kClsId);
      seg.insert(seg.end(), ids.begin() + static_cast<ptrdiff_t>(start),
                 ids.begin() + static_cast<ptrdiff_t>(end));
      seg.push_back(Vocabulary::kSepId);
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

Vocabulary BuildVocabulary(const std::vector<const Corpus*>& corpora, const NameLexicon& lexicon,
                           const Tokenizer& tokenizer, std::string_view mask_token) {
  Vocabulary specials;
  std::vector<std::string> tokens = specials.tokens();
  std::set<std::string> placeholders;
  for (HipaaCategory c : kAllHipaaCategories) placeholders.insert(PlaceholderToken(c, mask_token));
  tokens.insert(tokens.end(), placeholders.begin(), placeholders.end());

  std::set<std::string> words;
  for (const auto& n : lexicon.first_names()) words.insert(n.name);
  for (const auto& n : lexicon.last_names()) words.insert(n.name);
  for (const Corpus* corpus : corpora) {
    for (const Document& doc : corpus->documents) {
      for (const TokenPiece& p : tokenizer.Tokenize(doc.text)) {
        if (IsPlaceholderToken(p.text) || specials.Find(p.text)) continue;
        words.insert(p.text);
      }
    }
  }
  for (const std::string& w : words) {
    if (!placeholders.contains(w)) tokens.push_back(w);
  }
  return Vocabulary(std::move(tokens));
}

}  // namespace kart
