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

#ifndef KART_SCORER_H_
#define KART_SCORER_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kart/corpus.h"
#include "kart/lexicon.h"
#include "kart/tokenizer.h"

namespace kart {

enum class ModelKind { kCountNb, kTinyMlm, kExternal, kUniform };

std::string_view ModelKindName(ModelKind kind);
std::optional<ModelKind> ParseModelKind(std::string_view name);

struct TrainingConfig {
  int max_sequence_length = 128;
  double learning_rate = 2e-5;
  int batch_size = 64;
  int steps = 1000;
  uint64_t seed = 0;
  ModelKind model_kind = ModelKind::kCountNb;
  int embedding_dim = 64;
  double smoothing_k = 0.1;
  bool tie_embeddings = true;
  double mask_rate = 0.15;
  // Runs tiny_mlm batch work on OpenMP threads. Results are still
  // bit-identical to serial training because every reduction has a fixed
  // order; provenance records which mode ran.
  bool parallel = false;

  // Throws kConfiguration naming the offending field.
  void Validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

struct ModelProvenance {
  std::string model_id;
  std::string corpus_hash;
  std::string anonymizer = "id";
  TrainingConfig config;
  bool trained = true;
  std::string training_mode = "serial";

  bool operator==(const ModelProvenance&) const = default;
};

// Per-position candidate request: explicit tokens or the whole vocabulary.
struct FullVocab {
  bool operator==(const FullVocab&) const = default;
};
using CandidateSet = std::variant<FullVocab, std::vector<std::string>>;

struct PositionScores {
  std::vector<std::string> tokens;
  // Log-probabilities under the model's full-vocabulary distribution at this
  // position; explicit candidate lists are not renormalized.
  std::vector<double> log_probs;

  bool operator==(const PositionScores&) const = default;
};

using ScoreResult = std::map<size_t, PositionScores>;

// One named array of a model's serialized state.
struct ParamArray {
  std::string name;
  std::variant<std::vector<float>, std::vector<int32_t>> data;

  bool operator==(const ParamArray&) const = default;
};

class ScorerModel {
 public:
  virtual ~ScorerModel() = default;

  virtual ModelKind kind() const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual const ModelProvenance& provenance() const = 0;

  virtual bool supports_full_vocab() const { return true; }
  virtual bool has_embeddings() const { return false; }
  virtual size_t embedding_dim() const { return 0; }

  // Log-probabilities at each mask position with every listed position
  // masked at once. `ids` already carries kMaskId at those positions.
  // `candidates` has one entry per mask position. Row i covers the full
  // vocabulary when candidates[i] is empty, otherwise it is aligned with
  // candidates[i].
  virtual std::vector<std::vector<double>> Score(
      std::span<const TokenId> ids, std::span<const size_t> mask_positions,
      std::span<const std::vector<TokenId>> candidates) const = 0;

  virtual std::vector<float> Embedding(TokenId id) const;

  // Serialized parameters for the model directory; kUnsupported for models
  // that have no local state.
  virtual std::vector<ParamArray> ExportParams() const;
};

// Log-probability -ln W for every token.
class UniformScorer final : public ScorerModel {
 public:
  explicit UniformScorer(std::shared_ptr<const Vocabulary> vocab);

  ModelKind kind() const override { return ModelKind::kUniform; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  const ModelProvenance& provenance() const override { return provenance_; }
  std::vector<std::vector<double>> Score(
      std::span<const TokenId> ids, std::span<const size_t> mask_positions,
      std::span<const std::vector<TokenId>> candidates) const override;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  ModelProvenance provenance_;
};

// String-level entry point. Checks that every mask position is in range and
// holds the mask token and that candidates are in the vocabulary
// (kUnknownToken otherwise).
ScoreResult ScoreMasked(const ScorerModel& model, const std::vector<std::string>& tokens,
                        const std::vector<size_t>& mask_positions,
                        const std::map<size_t, CandidateSet>& candidates);

std::map<std::string, std::vector<float>> ExportEmbeddings(const ScorerModel& model,
                                                           const std::vector<std::string>& tokens);

// Token ids for text as seen by a model: placeholder tokens are dropped and
// unknown words map to [UNK].
std::vector<TokenId> EncodeText(std::string_view text, const Tokenizer& tokenizer,
                                const Vocabulary& vocab);

// Fixed-length training segments of a corpus, each wrapped in [CLS] ... [SEP].
std::vector<std::vector<TokenId>> SegmentCorpus(const Corpus& corpus, const Tokenizer& tokenizer,
                                                const Vocabulary& vocab, int max_sequence_length);

// Specials, the 18 placeholder tokens, then the sorted union of lexicon names
// and corpus words. Models compared against each other share one vocabulary.
Vocabulary BuildVocabulary(const std::vector<const Corpus*>& corpora, const NameLexicon& lexicon,
                           const Tokenizer& tokenizer,
                           std::string_view mask_token = kDefaultMaskToken);

}  // namespace kart

#endif  // KART_SCORER_H_
