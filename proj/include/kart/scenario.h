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

#ifndef KART_SCENARIO_H_
#define KART_SCENARIO_H_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kart/anonymize.h"
#include "kart/attack.h"
#include "kart/metrics.h"
#include "kart/scorer.h"

namespace kart {

// Category names accepted in knowledge and target sets.
inline constexpr std::string_view kMembershipCategory = "membership";
const std::set<std::string>& NonMedicalCategories();
const std::set<std::string>& MedicalCategories();

inline constexpr std::string_view kPublicResource = "d_public";
inline constexpr std::string_view kShadowResource = "d_shadow";

// (K, A, R, T) plus attack parameters. Sets hold raw names so that an
// invalid scenario can still be represented and reported in full.
struct KartScenario {
  std::string name;

  struct Knowledge {
    std::set<std::string> categories;
    // unknown | visited | in_corpus. "visited" only annotates reports.
    std::string membership = "unknown";
  } knowledge;

  AnonymizationOp anonymization = AnonymizationOp::Identity();         // a
  AnonymizationOp public_anonymization = AnonymizationOp::Hipaa();     // a'

  std::set<std::string> resources;

  struct Target {
    std::set<std::string> categories;
    // Conditioning attribute of an association target ("phone | leukemia").
    std::optional<std::string> condition;
  } target;

  struct Attack {
    double p0 = 0.5;
    std::vector<size_t> top_ks = {1, 10, 100, 1000};
    size_t ranking_k = 100;
    uint64_t seed = 0;
    std::vector<double> p0_grid;
    std::string prompt = std::string(kDefaultAssociationPrompt);
  } attack;

  // Used to train M when the world has no model, and for shadow models.
  TrainingConfig training;
};

KartScenario ParseScenario(std::string_view toml_text);
KartScenario LoadScenario(const std::filesystem::path& path);
nlohmann::ordered_json ScenarioJson(const KartScenario& scenario);

// Every violated invariant, in a fixed order; empty when valid.
std::vector<std::string> ValidateScenario(const KartScenario& scenario);

enum class Strategy { kDeanonymizePublic, kDirectProbe, kShadowAssisted };
std::string_view StrategyName(Strategy strategy);

struct PlanStep {
  std::string op;
  std::map<std::string, std::string> params;

  bool operator==(const PlanStep&) const = default;
};

struct AttackPlan {
  Strategy strategy = Strategy::kDirectProbe;
  std::vector<PlanStep> steps;

  bool operator==(const AttackPlan&) const = default;
};

// Throws kScenario listing the violations when the scenario is invalid.
AttackPlan CompilePlan(const KartScenario& scenario);
nlohmann::ordered_json PlanJson(const AttackPlan& plan);

// What run_scenario may read. Implementations hand out each resource on
// request so that tests can log which ones a run touched.
class ResourceProvider {
 public:
  virtual ~ResourceProvider() = default;
  virtual const ScorerModel& Model() = 0;
  // nullptr when the world lacks the resource.
  virtual const Corpus* PublicCorpus() = 0;
  virtual const Corpus* ShadowCorpus() = 0;
  virtual const PhiTable* ShadowGold() = 0;
  // Gold table of the private corpus, used for knowledge rows and scoring.
  virtual const PhiTable& Gold() = 0;
};

struct World {
  const Corpus* private_corpus = nullptr;  // trains M when `model` is absent
  const Corpus* public_corpus = nullptr;
  const Corpus* shadow_corpus = nullptr;
  const PhiTable* shadow_gold = nullptr;
  const PhiTable* gold = nullptr;
  const ScorerModel* model = nullptr;
};

struct RunContext {
  const NameLexicon* lexicon = nullptr;
  const ClinicalLexicon* clinical = nullptr;
  Tokenizer tokenizer;
  bool parallel = false;
};

// Serves a World, training M from the private corpus on first use.
class WorldProvider : public ResourceProvider {
 public:
  WorldProvider(const World& world, const KartScenario& scenario, const RunContext& context);
  ~WorldProvider() override;

  const ScorerModel& Model() override;
  const Corpus* PublicCorpus() override { return world_.public_corpus; }
  const Corpus* ShadowCorpus() override { return world_.shadow_corpus; }
  const PhiTable* ShadowGold() override { return world_.shadow_gold; }
  const PhiTable& Gold() override;

 private:
  World world_;
  const KartScenario& scenario_;
  const RunContext& context_;
  std::unique_ptr<ScorerModel> trained_;
};

struct ScenarioOutcome {
  AttackReport report;
  PhiTable attacker_table;  // attacker estimates (case 1); empty otherwise
};

// Compiles and executes the plan. Throws kPlanResource when the provider
// lacks a resource the plan needs and kConsistency when the model was
// trained under a different anonymizer than the scenario's a.
ScenarioOutcome RunScenario(const KartScenario& scenario, ResourceProvider& resources,
                            const RunContext& context);

}  // namespace kart

#endif  // KART_SCENARIO_H_
