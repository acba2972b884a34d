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

#ifndef KART_COUNT_SCORER_H_
#define KART_COUNT_SCORER_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "kart/scorer.h"

namespace kart {

// Compressed rows keyed by a context token: row c lists (target, count) pairs
// with targets ascending.
struct CountRows {
  std::vector<int32_t> offsets;
  std::vector<int32_t> targets;
  std::vector<int32_t> counts;

  bool operator==(const CountRows&) const = default;
};

struct CountTables {
  std::vector<int32_t> occurrences;  // per target token
  CountRows bag;                     // co-occurrence within a segment
  CountRows left;                    // keyed by the token just before the target
  CountRows right;                   // keyed by the token just after the target

  bool operator==(const CountTables&) const = default;
};

// Position-aware naive Bayes over a masked position:
//   P(t | ctx) ∝ prior(t) · Π_{c in bag} P(c | t) · P(left | t) · P(right | t)
// with add-k smoothing throughout. Neighbour factors are skipped when the
// neighbour is itself masked.
class CountScorer final : public ScorerModel {
 public:
  CountScorer(std::shared_ptr<const Vocabulary> vocab, CountTables tables,
              ModelProvenance provenance);

  ModelKind kind() const override { return ModelKind::kCountNb; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  const ModelProvenance& provenance() const override { return provenance_; }
  std::vector<std::vector<double>> Score(
      std::span<const TokenId> ids, std::span<const size_t> mask_positions,
      std::span<const std::vector<TokenId>> candidates) const override;
  std::vector<ParamArray> ExportParams() const override;

  const CountTables& tables() const { return tables_; }
  static CountTables TablesFromParams(const std::vector<ParamArray>& params, size_t vocab_size);

 private:
  void AddRow(const CountRows& rows, TokenId key, double log_k, std::vector<double>& score) const;

  std::shared_ptr<const Vocabulary> vocab_;
  CountTables tables_;
  ModelProvenance provenance_;
  double k_;
  std::vector<double> log_prior_;
  std::vector<double> log_bag_norm_;        // log(B(t) + kW)
  std::vector<double> log_neighbour_norm_;  // log(occ(t) + kW)
};

std::unique_ptr<CountScorer> TrainCountScorer(const Corpus& corpus,
                                              std::shared_ptr<const Vocabulary> vocab,
                                              const Tokenizer& tokenizer,
                                              const TrainingConfig& config);

}  // namespace kart

#endif  // KART_COUNT_SCORER_H_
