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

#ifndef KART_TINY_MLM_H_
#define KART_TINY_MLM_H_

#include <memory>
#include <vector>

#include "kart/scorer.h"

namespace kart {

struct TinyMlmParams {
  std::vector<float> embeddings;  // W x d, row-major
  std::vector<float> projection;  // d x d, row-major
  std::vector<float> bias;        // W
  std::vector<float> output;      // W x d when embeddings are untied, else empty

  bool operator==(const TinyMlmParams&) const = default;
};

// Seeded initial parameters: N(0, 0.1^2) embeddings (and output matrix when
// untied), identity projection, zero bias.
TinyMlmParams InitTinyMlm(size_t vocab_size, const TrainingConfig& config);

// Masked-token predictor: h = A · mean(E[context]), logits = O·h + b with
// O = E when embeddings are tied. Every masked position in a query shares h.
class TinyMlm final : public ScorerModel {
 public:
  TinyMlm(std::shared_ptr<const Vocabulary> vocab, TinyMlmParams params,
          ModelProvenance provenance);

  ModelKind kind() const override { return ModelKind::kTinyMlm; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  const ModelProvenance& provenance() const override { return provenance_; }
  bool has_embeddings() const override { return true; }
  size_t embedding_dim() const override { return dim_; }
  std::vector<std::vector<double>> Score(
      std::span<const TokenId> ids, std::span<const size_t> mask_positions,
      std::span<const std::vector<TokenId>> candidates) const override;
  std::vector<float> Embedding(TokenId id) const override;
  std::vector<ParamArray> ExportParams() const override;

  const TinyMlmParams& params() const { return params_; }
  static TinyMlmParams ParamsFromArrays(const std::vector<ParamArray>& arrays, size_t vocab_size,
                                        const TrainingConfig& config);

  // Full-vocabulary log-probabilities for a context (masked positions are
  // excluded by the caller).
  std::vector<double> Distribution(std::span<const TokenId> context) const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  TinyMlmParams params_;
  ModelProvenance provenance_;
  size_t dim_;
};

struct TrainingLog {
  std::vector<double> losses;  // one per step
};

std::unique_ptr<TinyMlm> TrainTinyMlm(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab,
                                      const Tokenizer& tokenizer, const TrainingConfig& config,
                                      TrainingLog* log = nullptr);

}  // namespace kart

#endif  // KART_TINY_MLM_H_
