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

#include "kart/metrics.h"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "kart/error.h"
#include "kart/io.h"
#include "kart/kernels.h"

namespace kart {
namespace {

using Json = nlohmann::ordered_json;

Json TopKJson(const std::map<size_t, double>& topk) {
  Json j = Json::object();
  for (const auto& [k, v] : topk) j[std::to_string(k)] = v;
  return j;
}

std::map<size_t, double> TopKFromJson(const Json& j) {
  std::map<size_t, double> out;
  for (const auto& [k, v] : j.items()) out[std::stoul(k)] = v.get<double>();
  return out;
}

template <typename T>
void PutOptional(Json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? Json(*v) : Json(nullptr);
}

std::optional<double> OptionalDouble(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

void Flatten(const Json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) Flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i) Flatten(j[i], fmt::format("{}.{}", prefix, i), out);
  } else if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) {
      out << prefix << ',' << s << '\n';
    } else {
      std::string quoted;
      for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      out << prefix << ",\"" << quoted << "\"\n";
    }
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

void CheckSupport(const MarginalDistribution& p, const MarginalDistribution& q, std::string_view which) {
  if (p.names != q.names || p.probs.size() != q.probs.size()) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("posterior and prior {}-name supports differ", which));
  }
}

}  // namespace

std::map<size_t, double> TopKAccuracy(const std::vector<CandidateRanking>& rankings,
                                      const std::vector<size_t>& ks) {
  if (rankings.empty()) throw Error(ErrorKind::kUndefinedMetric, "top-k accuracy of no rankings");
  std::map<size_t, double> out;
  for (size_t k : ks) {
    size_t hits = 0;
    for (const CandidateRanking& r : rankings) {
      if (r.gold_rank == 0) {
        throw Error(ErrorKind::kValidation, fmt::format("ranking {} lacks a gold rank", r.mention_id));
      }
      hits += r.gold_rank <= k;
    }
    out[k] = static_cast<double>(hits) / static_cast<double>(rankings.size());
  }
  return out;
}

double RankPercent(const std::vector<CandidateRanking>& rankings, size_t grid_size) {
  if (rankings.empty()) throw Error(ErrorKind::kUndefinedMetric, "rank percent of no rankings");
  if (grid_size == 0) throw Error(ErrorKind::kConfiguration, "grid size must be at least 1");
  double sum = 0.0;
  for (const CandidateRanking& r : rankings) {
    sum += 100.0 * static_cast<double>(r.gold_rank) / static_cast<double>(grid_size);
  }
  return sum / static_cast<double>(rankings.size());
}

double KlToPopularity(const NamePosterior& posterior, const FactoredDistribution& prior, bool parallel) {
  CheckSupport(posterior.first, prior.first, "first");
  CheckSupport(posterior.last, prior.last, "last");
  return kernels::GridKl(posterior.first.probs, posterior.last.probs, prior.first.probs,
                         prior.last.probs, kKlEpsilon, parallel);
}

double MeanKlToPopularity(const std::vector<NamePosterior>& posteriors,
                          const FactoredDistribution& prior, bool parallel) {
  if (posteriors.empty()) throw Error(ErrorKind::kUndefinedMetric, "KL over no posteriors");
  double sum = 0.0;
  for (const NamePosterior& p : posteriors) sum += KlToPopularity(p, prior, parallel);
  return sum / static_cast<double>(posteriors.size());
}

double MarginalNameMass(const ScorerModel& model, const std::vector<FullNameMention>& mentions,
                        const NameLexicon& lexicon, bool parallel) {
  if (!model.supports_full_vocab()) {
    throw Error(ErrorKind::kUnsupported,
                fmt::format("{} scorer cannot report full-vocabulary mass", ModelKindName(model.kind())));
  }
  if (mentions.empty()) throw Error(ErrorKind::kUndefinedMetric, "name mass over no mentions");
  double sum = 0.0;
  for (const NamePosterior& p : ComputeNamePosteriorsBatch(model, mentions, lexicon, parallel)) {
    sum += p.unnormalized_mass;
  }
  return sum / static_cast<double>(mentions.size());
}

double EmbeddingDistance(const ScorerModel& a, const ScorerModel& b,
                         const std::vector<std::string>& tokens) {
  if (a.embedding_dim() != b.embedding_dim()) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("embedding dimensions differ ({} vs {})", a.embedding_dim(), b.embedding_dim()));
  }
  if (tokens.empty()) throw Error(ErrorKind::kUndefinedMetric, "embedding distance over no tokens");
  const auto ea = ExportEmbeddings(a, tokens);
  const auto eb = ExportEmbeddings(b, tokens);
  double sum = 0.0;
  for (const std::string& t : tokens) {
    const std::vector<float>& x = ea.at(t);
    const std::vector<float>& y = eb.at(t);
    double d2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
      d2 += d * d;
    }
    sum += std::sqrt(d2);
  }
  return sum / static_cast<double>(tokens.size());
}

BaselineResult PopularNameBaseline(const NameLexicon& lexicon,
                                   const std::vector<std::pair<std::string, std::string>>& targets,
                                   const std::vector<size_t>& ks) {
  const FactoredDistribution prior = PopularityPrior(lexicon);
  BaselineResult result;
  std::vector<CandidateRanking> rankings;
  for (const auto& [first, last] : targets) {
    if (!lexicon.Contains(first, last)) {
      throw Error(ErrorKind::kDataIntegrity,
                  fmt::format("baseline target '{} {}' is outside the candidate grid", first, last));
    }
    CandidateRanking r;
    r.gold_rank = GoldRank(prior.first, prior.last, first, last);
    result.ranks.push_back(r.gold_rank);
    rankings.push_back(std::move(r));
  }
  result.topk_accuracy = TopKAccuracy(rankings, ks);
  result.rank_percent = RankPercent(rankings, lexicon.GridSize());
  return result;
}

Json AttackReport::ToJson() const {
  Json metrics;
  metrics["n_mentions"] = n_mentions;
  metrics["topk_accuracy"] = TopKJson(topk_accuracy);
  PutOptional(metrics, "rank_percent", rank_percent);
  PutOptional(metrics, "mean_kl", mean_kl);
  metrics["kl_epsilon"] = kl_epsilon;
  PutOptional(metrics, "mean_unnormalized_mass", mean_unnormalized_mass);
  if (baseline) {
    metrics["baseline"] = {{"topk_accuracy", TopKJson(baseline->topk_accuracy)},
                           {"rank_percent", baseline->rank_percent},
                           {"ranks", baseline->ranks}};
  } else {
    metrics["baseline"] = nullptr;
  }
  Json j;
  j["schema_version"] = schema_version;
  j["metrics"] = std::move(metrics);
  j["results"] = results;
  j["provenance"] = provenance;
  return j;
}

AttackReport AttackReport::FromJson(const Json& j) {
  AttackReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw Error(ErrorKind::kParse, fmt::format("report schema_version {} is not supported", r.schema_version));
    }
    const Json& m = j.at("metrics");
    r.n_mentions = m.at("n_mentions").get<size_t>();
    r.topk_accuracy = TopKFromJson(m.at("topk_accuracy"));
    r.rank_percent = OptionalDouble(m, "rank_percent");
    r.mean_kl = OptionalDouble(m, "mean_kl");
    r.kl_epsilon = m.at("kl_epsilon").get<double>();
    r.mean_unnormalized_mass = OptionalDouble(m, "mean_unnormalized_mass");
    if (const Json& b = m.at("baseline"); !b.is_null()) {
      BaselineResult base;
      base.topk_accuracy = TopKFromJson(b.at("topk_accuracy"));
      base.rank_percent = b.at("rank_percent").get<double>();
      base.ranks = b.at("ranks").get<std::vector<size_t>>();
      r.baseline = std::move(base);
    }
    r.results = j.at("results");
    r.provenance = j.at("provenance");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, fmt::format("report: {}", e.what()));
  }
  return r;
}

std::string AttackReport::ToJsonText() const { return ToJson().dump(2) + "\n"; }

std::string AttackReport::ToCsv() const {
  const Json j = ToJson();
  std::ostringstream out;
  out << "key,value\n";
  Flatten(j.at("metrics"), "metrics", out);
  Flatten(j.at("results"), "results", out);
  return out.str();
}

void SaveReport(const AttackReport& report, const std::filesystem::path& path) {
  WriteFileAtomic(path, report.ToJsonText());
}

AttackReport LoadReport(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
  return AttackReport::FromJson(j);
}

Json ProvenanceJson(const ModelProvenance& p) {
  const TrainingConfig& c = p.config;
  return Json{{"model_id", p.model_id},
              {"corpus_hash", p.corpus_hash},
              {"anonymizer", p.anonymizer},
              {"trained", p.trained},
              {"training_mode", p.training_mode},
              {"config",
               {{"model_kind", std::string(ModelKindName(c.model_kind))},
                {"max_sequence_length", c.max_sequence_length},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"steps", c.steps},
                {"seed", c.seed},
                {"embedding_dim", c.embedding_dim},
                {"smoothing_k", c.smoothing_k},
                {"tie_embeddings", c.tie_embeddings},
                {"mask_rate", c.mask_rate},
                {"parallel", c.parallel}}}};
}

}  // namespace kart
