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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/core.h>

#include "kart/anonymize.h"
#include "kart/attack.h"
#include "kart/error.h"
#include "kart/metrics.h"
#include "kart/scenario.h"
#include "kart/tiny_mlm.h"
#include "kart/train.h"
#include "test_support.h"

namespace kart {
namespace {

using testing::Clinical;
using testing::Fixture100;
using testing::Lexicon;

struct Outcome {
  bool pass;
  std::string detail;
};

std::shared_ptr<const Vocabulary> VocabFor(const Corpus& corpus) {
  return std::make_shared<const Vocabulary>(BuildVocabulary({&corpus}, Lexicon(), Tokenizer{}));
}

std::vector<FullNameMention> Targets(const GeneratedWorld& w) {
  const Corpus pub = ApplyAnonymizer(w.filled, AnonymizationOp::Hipaa());
  return SelectTargetedMentions(ExtractFullNameMentions(pub, Tokenizer{}, &w.gold), Lexicon(), 7);
}

double Top1(const ScorerModel& model, const std::vector<FullNameMention>& mentions) {
  return TopKAccuracy(InvertNames(model, mentions, Lexicon(), 1).rankings, {1}).at(1);
}

TrainingConfig TinyConfig() { return LoadTrainingConfig(testing::FixturePath("tiny_mlm.toml")); }

// ---- criteria -------------------------------------------------------------

Outcome Normalization() {
  const GeneratedWorld& w = Fixture100();
  const auto vocab = VocabFor(w.filled);
  const auto pool = ExtractFullNameMentions(w.filled, Tokenizer{}, &w.gold);

  std::mt19937_64 gen(1000);
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<TokenId> word(5, static_cast<TokenId>(vocab->size() - 1));
  std::bernoulli_distribution swap(0.3);
  std::vector<FullNameMention> mentions;
  for (int i = 0; i < 1000; ++i) {
    FullNameMention m = pool[pick(gen)];
    for (size_t t = 1; t + 1 < m.tokens.size(); ++t) {
      if (t != m.first_pos && t != m.last_pos && swap(gen)) m.tokens[t] = vocab->Token(word(gen));
    }
    mentions.push_back(std::move(m));
  }

  TrainingConfig tiny = TinyConfig();
  tiny.steps = 20;
  TrainingConfig uniform;
  uniform.model_kind = ModelKind::kUniform;
  std::vector<std::unique_ptr<ScorerModel>> models;
  models.push_back(TrainModel(w.filled, vocab, Tokenizer{}, TrainingConfig{}));
  models.push_back(TrainModel(w.filled, vocab, Tokenizer{}, tiny));
  models.push_back(TrainModel(w.filled, vocab, Tokenizer{}, uniform));

  double worst_posterior = 0, worst_full = 0;
  for (const auto& model : models) {
    for (const NamePosterior& p : ComputeNamePosteriorsBatch(*model, mentions, Lexicon(), true)) {
      double fs = 0, ls = 0;
      for (double x : p.first.probs) fs += x;
      for (double x : p.last.probs) ls += x;
      worst_posterior = std::max({worst_posterior, std::abs(fs - 1), std::abs(ls - 1)});
    }
    for (size_t i = 0; i < mentions.size(); i += 10) {
      const FullNameMention& m = mentions[i];
      const ScoreResult r = ScoreMasked(*model, m.tokens, {m.first_pos, m.last_pos},
                                        {{m.first_pos, FullVocab{}}, {m.last_pos, FullVocab{}}});
      for (const auto& [pos, s] : r) {
        double total = 0;
        for (double lp : s.log_probs) total += std::exp(lp);
        worst_full = std::max(worst_full, std::abs(total - 1));
      }
    }
  }
  return {worst_posterior <= 1e-9 && worst_full <= 1e-6,
          fmt::format("3 scorers x 1000 mentions, max posterior err {:.2e}, max full-vocab err {:.2e}",
                      worst_posterior, worst_full)};
}

struct Cell {
  double p;
  std::string first, last;
};

Outcome RankingOracle() {
  std::mt19937_64 gen(20261);
  std::uniform_int_distribution<size_t> size(1, 50);
  std::uniform_int_distribution<int> level(1, 4);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  size_t mismatches = 0, checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    MarginalDistribution m[2];
    for (int side = 0; side < 2; ++side) {
      const size_t n = size(gen);
      double total = 0;
      for (size_t i = 0; i < n; ++i) {
        m[side].names.push_back(fmt::format("{}{:03}", side ? 'l' : 'f', (i * 37) % 101));
        m[side].probs.push_back(trial % 2 ? level(gen) : u(gen));
        total += m[side].probs.back();
      }
      for (double& p : m[side].probs) p /= total;
    }
    std::vector<Cell> order;
    for (size_t j = 0; j < m[0].names.size(); ++j) {
      for (size_t k = 0; k < m[1].names.size(); ++k) {
        order.push_back({m[0].probs[j] * m[1].probs[k], m[0].names[j], m[1].names[k]});
      }
    }
    std::sort(order.begin(), order.end(), [](const Cell& a, const Cell& b) {
      if (a.p != b.p) return a.p > b.p;
      return std::tie(a.first, a.last) < std::tie(b.first, b.last);
    });
    const size_t gold = std::uniform_int_distribution<size_t>(0, order.size() - 1)(gen);
    // The full-grid ranking contains every smaller K as a prefix; each K is
    // still computed separately below.
    for (size_t k = 1; k <= order.size(); ++k) {
      const CandidateRanking r = RankCandidatesTopK(m[0], m[1], k, order[gold].first, order[gold].last);
      ++checked;
      bool ok = r.entries.size() == k && r.gold_rank == gold + 1;
      for (size_t i = 0; ok && i < k; ++i) {
        ok = r.entries[i].first == order[i].first && r.entries[i].last == order[i].last &&
             r.entries[i].probability == order[i].p;
      }
      mismatches += !ok;
    }
  }
  return {mismatches == 0, fmt::format("{} (grid, K) pairs, {} mismatches", checked, mismatches)};
}

Outcome AnonymizationTrend() {
  const GeneratedWorld& w = Fixture100();
  const auto vocab = VocabFor(w.filled);
  const auto mentions = Targets(w);
  const auto id_model = TrainModel(ApplyAnonymizer(w.filled, AnonymizationOp::Identity()), vocab,
                                   Tokenizer{}, TrainingConfig{});
  const auto hipaa_model = TrainModel(ApplyAnonymizer(w.filled, AnonymizationOp::Hipaa()), vocab,
                                      Tokenizer{}, TrainingConfig{});
  std::vector<std::pair<std::string, std::string>> gold;
  for (const FullNameMention& m : mentions) gold.emplace_back(m.gold_first, m.gold_last);
  const double id = Top1(*id_model, mentions);
  const double hipaa = Top1(*hipaa_model, mentions);
  const double baseline = PopularNameBaseline(Lexicon(), gold, {1}).topk_accuracy.at(1);
  return {id >= hipaa && hipaa <= baseline + 0.02,
          fmt::format("top-1 id {:.3f}, hipaa {:.3f}, baseline {:.3f} ({} targets)", id, hipaa, baseline,
                      mentions.size())};
}

Outcome Memorization() {
  const GeneratedWorld w = testing::WorldFrom("memorization.toml");
  const auto vocab = VocabFor(w.filled);
  const auto model = TrainModel(w.filled, vocab, Tokenizer{}, TrainingConfig{});
  const auto mentions = SelectTargetedMentions(ExtractFullNameMentions(w.filled, Tokenizer{}, &w.gold),
                                               Lexicon(), 7);
  const double top1 = Top1(*model, mentions);
  return {top1 >= 0.9, fmt::format("top-1 {:.3f} over {} targets", top1, mentions.size())};
}

struct TinyPair {
  std::shared_ptr<const Vocabulary> vocab;
  std::unique_ptr<ScorerModel> id, hipaa;
};

const TinyPair& Tiny() {
  static const TinyPair pair = [] {
    const GeneratedWorld& w = Fixture100();
    TinyPair p;
    p.vocab = VocabFor(w.filled);
    TrainingConfig cfg = TinyConfig();
    cfg.parallel = true;
    p.id = TrainModel(ApplyAnonymizer(w.filled, AnonymizationOp::Identity()), p.vocab, Tokenizer{}, cfg);
    p.hipaa = TrainModel(ApplyAnonymizer(w.filled, AnonymizationOp::Hipaa()), p.vocab, Tokenizer{}, cfg);
    return p;
  }();
  return pair;
}

Outcome TinyNameMass() {
  const auto mentions = Targets(Fixture100());
  const double id = MarginalNameMass(*Tiny().id, mentions, Lexicon(), true);
  const double hipaa = MarginalNameMass(*Tiny().hipaa, mentions, Lexicon(), true);
  return {id > hipaa, fmt::format("mean name mass id {:.4e}, hipaa {:.4e}", id, hipaa)};
}

Outcome EmbeddingMovement() {
  std::set<std::string> names;
  for (const FullNameMention& m : Targets(Fixture100())) {
    names.insert(m.gold_first);
    names.insert(m.gold_last);
  }
  const std::vector<std::string> tokens(names.begin(), names.end());
  const double between = EmbeddingDistance(*Tiny().id, *Tiny().hipaa, tokens);

  TrainingConfig cfg = TinyConfig();
  ModelProvenance prov;
  prov.config = cfg;
  const TinyMlm init(Tiny().vocab, InitTinyMlm(Tiny().vocab->size(), cfg), prov);
  const double id_moved = EmbeddingDistance(*Tiny().id, init, tokens);
  const double hipaa_moved = EmbeddingDistance(*Tiny().hipaa, init, tokens);
  return {between > 0 && id_moved > 0 && hipaa_moved > 0,
          fmt::format("{} name tokens, distance {:.4e}, moved from init id {:.4e}, hipaa {:.4e}",
                      tokens.size(), between, id_moved, hipaa_moved)};
}

Outcome KlSanity() {
  const FactoredDistribution prior = PopularityPrior(Lexicon());
  NamePosterior at_prior;
  at_prior.first = prior.first;
  at_prior.last = prior.last;
  const double zero = KlToPopularity(at_prior, prior, true);

  FactoredDistribution uniform = prior;
  std::fill(uniform.first.probs.begin(), uniform.first.probs.end(), 1.0 / uniform.first.probs.size());
  std::fill(uniform.last.probs.begin(), uniform.last.probs.end(), 1.0 / uniform.last.probs.size());
  NamePosterior point = at_prior;
  std::fill(point.first.probs.begin(), point.first.probs.end(), 0.0);
  std::fill(point.last.probs.begin(), point.last.probs.end(), 0.0);
  point.first.probs[point.first.probs.size() / 2] = 1.0;
  point.last.probs[0] = 1.0;
  const double n = static_cast<double>(uniform.first.probs.size() * uniform.last.probs.size());
  const double err = std::abs(KlToPopularity(point, uniform, true) - std::log(n));
  return {std::abs(zero) <= 1e-12 && err <= 1e-9,
          fmt::format("KL at prior {:.2e}, |point-mass KL - ln {}| {:.2e}", zero, n, err)};
}

Outcome Completeness() {
  GeneratorConfig config = LoadGeneratorConfig(testing::FixturePath("fixture100.toml"));
  config.patients = 200;
  config.fill_rate = 1.0;
  const GeneratedWorld w = GenerateWorld(config, Lexicon(), testing::Sources());
  size_t spans = 0;
  for (const Document& d : w.filled.documents) spans += d.phi_spans.size();
  const std::set<HipaaCategory> all(kAllHipaaCategories.begin(), kAllHipaaCategories.end());
  const auto hits = ScanForPhi(ApplyAnonymizer(w.filled, AnonymizationOp::Hipaa()), w.gold, all);
  return {spans >= 10000 && hits.empty(), fmt::format("{} filled spans, {} residual hits", spans, hits.size())};
}

Outcome FillRate() {
  GeneratorConfig config = LoadGeneratorConfig(testing::FixturePath("fixture100.toml"));
  config.patients = 200;
  const GeneratedWorld w = GenerateWorld(config, Lexicon(), testing::Sources());
  size_t n = 0, filled = 0;
  for (const Document& d : w.filled.documents) {
    for (const PhiSpan& s : d.phi_spans) {
      if (n == 10000) break;
      ++n;
      filled += s.surrogate.has_value();
    }
  }
  const double p = config.fill_rate;
  const double half = 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(n));
  const double rate = static_cast<double>(filled) / static_cast<double>(n);
  return {n == 10000 && std::abs(rate - p) <= half,
          fmt::format("{} of {} placeholders filled ({:.4f}, interval {:.4f} +/- {:.4f})", filled, n, rate, p,
                      half)};
}

std::string PipelineReport() {
  const GeneratedWorld w = testing::WorldFrom("fixture100.toml");
  const Corpus pub = ApplyAnonymizer(w.filled, AnonymizationOp::Hipaa());
  const Corpus priv = ApplyAnonymizer(w.filled, AnonymizationOp::Hipaa());
  KartScenario s = LoadScenario(testing::SourceDir() / "scenarios" / "case1.toml");
  RunContext ctx;
  ctx.lexicon = &Lexicon();
  ctx.clinical = &Clinical();
  ctx.parallel = true;
  World world;
  world.private_corpus = &priv;
  world.public_corpus = &pub;
  world.gold = &w.gold;
  WorldProvider provider(world, s, ctx);
  return RunScenario(s, provider, ctx).report.ToJsonText();
}

Outcome Determinism() {
  const std::string a = PipelineReport();
  const std::string b = PipelineReport();
  return {a == b, fmt::format("{} report bytes, identical {}", a.size(), a == b)};
}

Outcome Case2() {
  const GeneratedWorld priv = testing::WorldFrom("case2_private.toml");
  const GeneratedWorld shadow = testing::WorldFrom("case2_shadow.toml");
  const KartScenario s = LoadScenario(testing::SourceDir() / "scenarios" / "case2.toml");
  const auto model = TrainModel(priv.filled, VocabFor(priv.filled), Tokenizer{}, s.training);
  const auto candidates = IdentifierCandidates(model->vocabulary(), HipaaCategory::kPhone);
  const auto hits = AssociationAttack(*model, *s.target.condition, candidates, 0.5, Tokenizer{});
  const auto gold = GoldAssociations(priv.gold, *s.target.condition, HipaaCategory::kPhone);
  const bool recovered = !gold.empty() && std::all_of(gold.begin(), gold.end(), [&](const std::string& g) {
    return std::any_of(hits.begin(), hits.end(), [&](const AssociationHit& h) { return h.identifier == g; });
  });

  ShadowSpec spec;
  spec.condition = *s.target.condition;
  spec.grid = s.attack.p0_grid;
  const CalibrationResult cal = ShadowCalibrate(shadow.filled, shadow.gold, spec, s.training, Lexicon(),
                                                Tokenizer{});
  return {recovered && cal.chosen.f1 == 1.0,
          fmt::format("{} hit(s) at p0=0.5, planted pair recovered {}, calibrated p0 {} with F1 {:.3f}",
                      hits.size(), recovered, cal.chosen.p0, cal.chosen.f1)};
}

}  // namespace
}  // namespace kart

int main() {
  using Criterion = std::tuple<std::string, double, std::function<kart::Outcome()>>;
  const std::vector<Criterion> criteria = {
      {"normalization", 30, kart::Normalization},
      {"ranking-oracle", 30, kart::RankingOracle},
      {"anonymization-trend", 120, kart::AnonymizationTrend},
      {"memorization-control", 60, kart::Memorization},
      {"tiny-name-mass-direction", 0, kart::TinyNameMass},
      {"embedding-distance-direction", 0, kart::EmbeddingMovement},
      {"kl-sanity", 0, kart::KlSanity},
      {"hipaa-completeness", 0, kart::Completeness},
      {"fill-rate-interval", 0, kart::FillRate},
      {"pipeline-determinism", 0, kart::Determinism},
      {"case2-end-to-end", 0, kart::Case2},
  };
  int failures = 0;
  for (const auto& [name, budget, check] : criteria) {
    const kart::testing::Stopwatch watch;
    kart::Outcome o{false, ""};
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, e.what()};
    }
    const double secs = watch.Seconds();
    std::string timing = fmt::format("{:.1f}s", secs);
    if (budget > 0) {
      timing += fmt::format(" of {:.0f}s", budget);
      if (secs > budget) {
        o.pass = false;
        o.detail += "; over time budget";
      }
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << timing << "]" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
