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

#ifndef KART_METRICS_H_
#define KART_METRICS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kart/attack.h"
#include "kart/lexicon.h"
#include "kart/scorer.h"

namespace kart {

inline constexpr double kKlEpsilon = 1e-12;

// Fraction of rankings with gold_rank <= k, for every k.
std::map<size_t, double> TopKAccuracy(const std::vector<CandidateRanking>& rankings,
                                      const std::vector<size_t>& ks);

// Mean of 100 * gold_rank / grid_size; higher means the gold names sit lower
// in the rankings.
double RankPercent(const std::vector<CandidateRanking>& rankings, size_t grid_size);

// KL(posterior || prior) in nats over the full grid.
double KlToPopularity(const NamePosterior& posterior, const FactoredDistribution& prior,
                      bool parallel = false);
double MeanKlToPopularity(const std::vector<NamePosterior>& posteriors,
                          const FactoredDistribution& prior, bool parallel = false);

// Mean over mentions of (sum_j P(u_j)) * (sum_k P(v_k)) from the
// simultaneous-mask query under the full-vocabulary distributions.
double MarginalNameMass(const ScorerModel& model, const std::vector<FullNameMention>& mentions,
                        const NameLexicon& lexicon, bool parallel = false);

// Mean Euclidean distance between the two models' embeddings of `tokens`.
double EmbeddingDistance(const ScorerModel& a, const ScorerModel& b,
                         const std::vector<std::string>& tokens);

struct BaselineResult {
  std::vector<size_t> ranks;
  std::map<size_t, double> topk_accuracy;
  double rank_percent = 0.0;
};

// Ranks each target under the popularity prior with the tie-break used by
// RankCandidatesTopK.
BaselineResult PopularNameBaseline(const NameLexicon& lexicon,
                                   const std::vector<std::pair<std::string, std::string>>& targets,
                                   const std::vector<size_t>& ks);

inline constexpr int kReportSchemaVersion = 1;

struct AttackReport {
  int schema_version = kReportSchemaVersion;
  size_t n_mentions = 0;
  std::map<size_t, double> topk_accuracy;
  std::optional<double> rank_percent;
  std::optional<double> mean_kl;
  double kl_epsilon = kKlEpsilon;
  std::optional<double> mean_unnormalized_mass;
  std::optional<BaselineResult> baseline;
  // Strategy-specific outcomes (case 1 targets, case 2 hits, calibration).
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  // Scenario echo and model provenance.
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  nlohmann::ordered_json ToJson() const;
  static AttackReport FromJson(const nlohmann::ordered_json& j);
  // Pretty JSON with a trailing newline; identical reports give identical bytes.
  std::string ToJsonText() const;
  // "key,value" rows for every scalar under metrics and results.
  std::string ToCsv() const;
};

void SaveReport(const AttackReport& report, const std::filesystem::path& path);
AttackReport LoadReport(const std::filesystem::path& path);

nlohmann::ordered_json ProvenanceJson(const ModelProvenance& provenance);

}  // namespace kart

#endif  // KART_METRICS_H_
