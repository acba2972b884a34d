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

#include <gtest/gtest.h>

#include "kart/error.h"
#include "kart/tiny_mlm.h"
#include "test_support.h"

namespace kart {
namespace {

using testing::Lexicon;

std::vector<CandidateRanking> Ranks(std::vector<size_t> ranks) {
  std::vector<CandidateRanking> out;
  for (size_t r : ranks) {
    CandidateRanking c;
    c.gold_rank = r;
    out.push_back(c);
  }
  return out;
}

TEST(MetricsTest, TopKAccuracyCountsRanksAtOrBelowK) {
  auto acc = TopKAccuracy(Ranks({1, 2, 10, 11, 1000}), {1, 10, 100, 1000});
  EXPECT_DOUBLE_EQ(acc.at(1), 0.2);
  EXPECT_DOUBLE_EQ(acc.at(10), 0.6);
  EXPECT_DOUBLE_EQ(acc.at(100), 0.8);
  EXPECT_DOUBLE_EQ(acc.at(1000), 1.0);
  EXPECT_THROW(TopKAccuracy({}, {1}), Error);
  EXPECT_THROW(TopKAccuracy(Ranks({0}), {1}), Error);
}

TEST(MetricsTest, RankPercentIsTheMeanRelativeRank) {
  EXPECT_DOUBLE_EQ(RankPercent(Ranks({1, 3}), 4), 50.0);
  EXPECT_THROW(RankPercent({}, 4), Error);
  EXPECT_THROW(RankPercent(Ranks({1}), 0), Error);
}

TEST(MetricsTest, KlToPopularityVanishesAtThePriorAndIsLogGridForAPointMass) {
  const FactoredDistribution prior = PopularityPrior(Lexicon());
  NamePosterior at_prior;
  at_prior.first = prior.first;
  at_prior.last = prior.last;
  EXPECT_NEAR(KlToPopularity(at_prior, prior), 0.0, 1e-12);

  NamePosterior point = at_prior;
  std::fill(point.first.probs.begin(), point.first.probs.end(), 0.0);
  std::fill(point.last.probs.begin(), point.last.probs.end(), 0.0);
  point.first.probs[3] = 1.0;
  point.last.probs[5] = 1.0;
  const double expected = -std::log(prior.first.probs[3] * prior.last.probs[5]);
  EXPECT_NEAR(KlToPopularity(point, prior), expected, 1e-9);
  EXPECT_NEAR(MeanKlToPopularity({at_prior, point}, prior, true), expected / 2, 1e-9);

  NamePosterior wrong = at_prior;
  wrong.first.names.pop_back();
  wrong.first.probs.pop_back();
  EXPECT_THROW(KlToPopularity(wrong, prior), Error);
}

TEST(MetricsTest, BaselineRanksFollowThePopularityOrder) {
  const auto& first = Lexicon().first_names();
  const auto& last = Lexicon().last_names();
  BaselineResult b = PopularNameBaseline(
      Lexicon(), {{first[0].name, last[0].name}, {first[1].name, last[0].name}}, {1, 2});
  EXPECT_EQ(b.ranks[0], 1u);
  EXPECT_GT(b.ranks[1], 1u);
  EXPECT_DOUBLE_EQ(b.topk_accuracy.at(1), 0.5);
  EXPECT_THROW(PopularNameBaseline(Lexicon(), {{"zzz", "yyy"}}, {1}), Error);
}

TEST(MetricsTest, EmbeddingDistanceIsMeanEuclidean) {
  auto vocab = std::make_shared<const Vocabulary>(
      std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "a", "b"});
  TinyMlmParams pa, pb;
  pa.embeddings.assign(7 * 2, 0.0f);
  pb.embeddings = pa.embeddings;
  pb.embeddings[5 * 2] = 3.0f;
  pb.embeddings[5 * 2 + 1] = 4.0f;
  pa.projection = pb.projection = {1, 0, 0, 1};
  pa.bias = pb.bias = std::vector<float>(7, 0.0f);
  ModelProvenance prov;
  prov.config.model_kind = ModelKind::kTinyMlm;
  prov.config.embedding_dim = 2;
  TinyMlm a(vocab, pa, prov), b(vocab, pb, prov);
  EXPECT_DOUBLE_EQ(EmbeddingDistance(a, b, {"a", "b"}), 2.5);
  EXPECT_DOUBLE_EQ(EmbeddingDistance(a, a, {"a"}), 0.0);
  EXPECT_THROW(EmbeddingDistance(a, b, {}), Error);
}

AttackReport SampleReport() {
  AttackReport r;
  r.n_mentions = 3;
  r.topk_accuracy = {{1, 0.25}, {10, 0.5}};
  r.rank_percent = 12.5;
  r.mean_kl = 0.75;
  r.mean_unnormalized_mass = 1e-5;
  BaselineResult b;
  b.ranks = {1, 4};
  b.topk_accuracy = {{1, 0.5}};
  b.rank_percent = 3.0;
  r.baseline = b;
  r.results["note"] = "has, comma";
  r.results["list"] = {1, 2};
  r.provenance["scenario"] = "case1";
  return r;
}

TEST(MetricsTest, ReportJsonRoundTripsByteIdentically) {
  AttackReport r = SampleReport();
  AttackReport back = AttackReport::FromJson(r.ToJson());
  EXPECT_EQ(back.ToJsonText(), r.ToJsonText());
  EXPECT_EQ(back.topk_accuracy, r.topk_accuracy);
  EXPECT_EQ(back.baseline->ranks, r.baseline->ranks);

  testing::TempDir dir;
  SaveReport(r, dir / "r.json");
  EXPECT_EQ(LoadReport(dir / "r.json").ToJsonText(), r.ToJsonText());
}

TEST(MetricsTest, ReportCsvListsScalars) {
  const std::string csv = SampleReport().ToCsv();
  EXPECT_EQ(csv.rfind("key,value\n", 0), 0u);
  EXPECT_NE(csv.find("metrics.rank_percent,12.5\n"), std::string::npos);
  EXPECT_NE(csv.find("results.note,\"has, comma\"\n"), std::string::npos);
  EXPECT_NE(csv.find("results.list.1,2\n"), std::string::npos);
}

TEST(MetricsTest, OptionalMetricsAreOmittedWhenAbsent) {
  AttackReport r;
  r.n_mentions = 1;
  r.topk_accuracy = {{1, 1.0}};
  AttackReport back = AttackReport::FromJson(r.ToJson());
  EXPECT_FALSE(back.mean_kl.has_value());
  EXPECT_FALSE(back.baseline.has_value());
}

}  // namespace
}  // namespace kart
