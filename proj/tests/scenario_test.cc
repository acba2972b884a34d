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

#include "kart/scenario.h"

#include <algorithm>
#include <regex>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "kart/error.h"
#include "kart/train.h"
#include "test_support.h"

namespace kart {
namespace {

using ::testing::_;
using ::testing::AtLeast;
using ::testing::Invoke;
using ::testing::NiceMock;
using ::testing::Return;
using ::testing::ReturnRef;

KartScenario Case1() { return LoadScenario(testing::SourceDir() / "scenarios" / "case1.toml"); }
KartScenario Case2() { return LoadScenario(testing::SourceDir() / "scenarios" / "case2.toml"); }

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

RunContext Context() {
  RunContext ctx;
  ctx.lexicon = &testing::Lexicon();
  ctx.clinical = &testing::Clinical();
  return ctx;
}

class MockProvider : public ResourceProvider {
 public:
  MOCK_METHOD(const ScorerModel&, Model, (), (override));
  MOCK_METHOD(const Corpus*, PublicCorpus, (), (override));
  MOCK_METHOD(const Corpus*, ShadowCorpus, (), (override));
  MOCK_METHOD(const PhiTable*, ShadowGold, (), (override));
  MOCK_METHOD(const PhiTable&, Gold, (), (override));
};

TEST(ScenarioTest, ShippedScenariosAreValid) {
  EXPECT_TRUE(ValidateScenario(Case1()).empty());
  EXPECT_TRUE(ValidateScenario(Case2()).empty());
  EXPECT_EQ(Case1().anonymization, AnonymizationOp::Hipaa());
  EXPECT_EQ(Case2().target.condition, "leukemia");
  EXPECT_EQ(Case2().attack.p0_grid.size(), 9u);
}

TEST(ScenarioTest, ValidationReportsEachViolation) {
  KartScenario s = Case1();
  s.target.categories.clear();
  EXPECT_TRUE(Contains(ValidateScenario(s), "target must be non-empty"));

  s = Case1();
  s.public_anonymization = AnonymizationOp::Identity();
  EXPECT_TRUE(Contains(ValidateScenario(s), "public_anonymization must be hipaa when d_public is a resource"));

  s = Case1();
  s.knowledge.categories = {"sex"};
  EXPECT_TRUE(Contains(ValidateScenario(s), "deanonymize_public needs the full name in knowledge"));

  s = Case2();
  s.target.condition.reset();
  EXPECT_TRUE(Contains(ValidateScenario(s), "an association target needs a condition"));

  s = Case2();
  s.attack.p0_grid.clear();
  EXPECT_TRUE(Contains(ValidateScenario(s), "shadow calibration needs a non-empty attack.p0_grid"));

  s = Case2();
  s.knowledge.categories = {"shoe_size"};
  s.resources.insert("d_secret");
  s.knowledge.membership = "maybe";
  auto v = ValidateScenario(s);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], "unknown knowledge category 'shoe_size'");

  try {
    CompilePlan(s);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kScenario);
    EXPECT_NE(std::string(e.what()).find("invalid scenario; unknown knowledge category"), std::string::npos);
  }
}

TEST(ScenarioTest, ParsingRejectsUnknownKeysAndAcceptsCustomOperators) {
  EXPECT_THROW(ParseScenario("name = \"x\"\nbogus = 1\n"), Error);
  KartScenario s = ParseScenario(
      "[anonymization]\na = { custom = [\"names\", \"phone\"] }\n[target]\ncategories = [\"phone\"]\n"
      "condition = \"gout\"\n");
  EXPECT_EQ(s.anonymization, AnonymizationOp::Custom({HipaaCategory::kNames, HipaaCategory::kPhone}));
  EXPECT_TRUE(ValidateScenario(s).empty());
  EXPECT_EQ(CompilePlan(s).strategy, Strategy::kDirectProbe);
}

// Exhaustive sweep over a small grid of tuples; validity and strategy are
// checked against the rules restated directly.
TEST(ScenarioTest, ExhaustiveGridMatchesTheRules) {
  const std::vector<std::string> knowledge_alphabet = {"full_name", "first_name", "last_name", "sex"};
  const std::vector<std::set<std::string>> targets = {{}, {"pmh"}, {"phone"}, {"pmh", "phone"}};
  const std::vector<std::set<std::string>> resources = {
      {}, {"d_public"}, {"d_shadow"}, {"d_public", "d_shadow"}};
  size_t valid = 0, total = 0;
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::set<std::string> known;
    for (unsigned b = 0; b < 4; ++b) {
      if (mask & (1u << b)) known.insert(knowledge_alphabet[b]);
    }
    const bool knows_name = known.contains("full_name") ||
                            (known.contains("first_name") && known.contains("last_name"));
    for (bool a_hipaa : {false, true}) {
      for (bool pub_hipaa : {false, true}) {
        for (const auto& res : resources) {
          for (const auto& tgt : targets) {
            for (bool condition : {false, true}) {
              for (bool grid : {false, true}) {
                KartScenario s;
                s.knowledge.categories = known;
                s.anonymization = a_hipaa ? AnonymizationOp::Hipaa() : AnonymizationOp::Identity();
                s.public_anonymization = pub_hipaa ? AnonymizationOp::Hipaa() : AnonymizationOp::Identity();
                s.resources = res;
                s.target.categories = tgt;
                if (condition) s.target.condition = "leukemia";
                if (grid) s.attack.p0_grid = {0.5};

                const bool pub = res.contains("d_public");
                const bool shadow = res.contains("d_shadow");
                bool expect_valid = !tgt.empty();
                if (pub) {
                  expect_valid = expect_valid && pub_hipaa && knows_name && !tgt.contains("phone");
                } else {
                  expect_valid = expect_valid && !tgt.contains("pmh") && condition && (!shadow || grid);
                }
                ++total;
                const bool is_valid = ValidateScenario(s).empty();
                ASSERT_EQ(is_valid, expect_valid) << ScenarioJson(s).dump();
                if (!is_valid) {
                  EXPECT_THROW(CompilePlan(s), Error);
                  continue;
                }
                ++valid;
                const Strategy expected = pub      ? Strategy::kDeanonymizePublic
                                          : shadow ? Strategy::kShadowAssisted
                                                   : Strategy::kDirectProbe;
                EXPECT_EQ(CompilePlan(s).strategy, expected);
              }
            }
          }
        }
      }
    }
  }
  EXPECT_EQ(total, 4096u);
  EXPECT_GT(valid, 0u);
}

TEST(ScenarioTest, PlansForTheThreeStrategies) {
  AttackPlan p1 = CompilePlan(Case1());
  EXPECT_EQ(p1.strategy, Strategy::kDeanonymizePublic);
  ASSERT_EQ(p1.steps.size(), 5u);
  EXPECT_EQ(p1.steps.front().op, "extract_full_name_mentions");
  EXPECT_EQ(p1.steps.back().params.at("filters"), "sex");
  EXPECT_EQ(p1.steps[3].params.at("k"), "100");

  AttackPlan p2 = CompilePlan(Case2());
  EXPECT_EQ(p2.strategy, Strategy::kShadowAssisted);
  ASSERT_EQ(p2.steps.size(), 2u);
  EXPECT_EQ(p2.steps[0].op, "shadow_calibrate");
  EXPECT_EQ(p2.steps[1].params.at("p0"), "calibrated");

  KartScenario direct = Case2();
  direct.resources.clear();
  AttackPlan p3 = CompilePlan(direct);
  EXPECT_EQ(p3.strategy, Strategy::kDirectProbe);
  EXPECT_EQ(p3.steps.at(0).params.at("p0"), "0.5");
  EXPECT_EQ(PlanJson(p3).at("strategy"), StrategyName(Strategy::kDirectProbe));
}

struct Case2World {
  GeneratedWorld priv = testing::WorldFrom("case2_private.toml");
  GeneratedWorld shadow = testing::WorldFrom("case2_shadow.toml");
};

const Case2World& Case2Data() {
  static const Case2World w;
  return w;
}

TEST(ScenarioTest, DirectProbeNeverTouchesCorpusResources) {
  const Case2World& w = Case2Data();
  KartScenario s = Case2();
  s.resources.clear();
  RunContext ctx = Context();
  World world;
  world.private_corpus = &w.priv.filled;
  world.gold = &w.priv.gold;
  WorldProvider real(world, s, ctx);

  NiceMock<MockProvider> mock;
  EXPECT_CALL(mock, Model()).Times(AtLeast(1)).WillRepeatedly(Invoke([&]() -> const ScorerModel& {
    return real.Model();
  }));
  EXPECT_CALL(mock, Gold()).WillRepeatedly(ReturnRef(w.priv.gold));
  EXPECT_CALL(mock, PublicCorpus()).Times(0);
  EXPECT_CALL(mock, ShadowCorpus()).Times(0);
  EXPECT_CALL(mock, ShadowGold()).Times(0);
  ScenarioOutcome out = RunScenario(s, mock, ctx);
  EXPECT_TRUE(out.report.results.at("association").contains("phone"));
  EXPECT_FALSE(out.report.results.contains("calibration"));
}

TEST(ScenarioTest, ShadowPlanReadsTheShadowButNotThePublicCorpus) {
  const Case2World& w = Case2Data();
  KartScenario s = Case2();
  RunContext ctx = Context();
  World world;
  world.private_corpus = &w.priv.filled;
  world.gold = &w.priv.gold;
  WorldProvider real(world, s, ctx);

  NiceMock<MockProvider> mock;
  ON_CALL(mock, Model()).WillByDefault(Invoke([&]() -> const ScorerModel& { return real.Model(); }));
  ON_CALL(mock, Gold()).WillByDefault(ReturnRef(w.priv.gold));
  EXPECT_CALL(mock, ShadowCorpus()).Times(AtLeast(1)).WillRepeatedly(Return(&w.shadow.filled));
  EXPECT_CALL(mock, ShadowGold()).Times(AtLeast(1)).WillRepeatedly(Return(&w.shadow.gold));
  EXPECT_CALL(mock, PublicCorpus()).Times(0);
  ScenarioOutcome out = RunScenario(s, mock, ctx);

  const auto& a = out.report.results.at("association").at("phone");
  const auto gold = GoldAssociations(w.priv.gold, "leukemia", HipaaCategory::kPhone);
  EXPECT_EQ(a.at("gold").get<std::vector<std::string>>(), gold);
  EXPECT_EQ(a.at("recovered").get<std::vector<std::string>>(), gold);
  EXPECT_DOUBLE_EQ(a.at("f1").get<double>(), 1.0);
  EXPECT_TRUE(out.report.results.at("calibration").contains("phone"));
}

TEST(ScenarioTest, MissingShadowIsAPlanResourceError) {
  const Case2World& w = Case2Data();
  KartScenario s = Case2();
  RunContext ctx = Context();
  World world;
  world.private_corpus = &w.priv.filled;
  world.gold = &w.priv.gold;
  WorldProvider provider(world, s, ctx);
  try {
    RunScenario(s, provider, ctx);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPlanResource);
  }
}

TEST(ScenarioTest, ModelTrainedUnderADifferentOperatorIsInconsistent) {
  const Case2World& w = Case2Data();
  KartScenario s = Case2();
  s.resources.clear();
  s.anonymization = AnonymizationOp::Hipaa();
  RunContext ctx = Context();
  World world;
  world.private_corpus = &w.priv.filled;  // provenance says a = id
  world.gold = &w.priv.gold;
  WorldProvider provider(world, s, ctx);
  try {
    RunScenario(s, provider, ctx);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConsistency);
  }
}

struct Case1World {
  Corpus masked;
  std::unique_ptr<ScorerModel> model;
  Case1World() {
    masked = ApplyAnonymizer(testing::Fixture100().filled, AnonymizationOp::Hipaa());
    auto vocab = std::make_shared<const Vocabulary>(
        BuildVocabulary({&masked}, testing::Lexicon(), Tokenizer{}));
    model = TrainModel(masked, vocab, Tokenizer{}, Case1().training);
  }
};

const Case1World& Case1Data() {
  static const Case1World w;
  return w;
}

ScenarioOutcome RunCase1() {
  const Case1World& c = Case1Data();
  KartScenario s = Case1();
  RunContext ctx = Context();
  World world;
  world.model = c.model.get();
  world.public_corpus = &c.masked;
  world.gold = &testing::Fixture100().gold;
  WorldProvider provider(world, s, ctx);
  return RunScenario(s, provider, ctx);
}

// Whole-phrase condition matches, recomputed with a regular expression.
std::set<std::string> ConditionsIn(const std::string& text) {
  std::set<std::string> out;
  const std::string lower = ToLowerAscii(text);
  for (const std::string& c : testing::Clinical().conditions) {
    if (std::regex_search(lower, std::regex("(^|[^a-z0-9])" + c + "($|[^a-z0-9])"))) out.insert(c);
  }
  return out;
}

TEST(ScenarioTest, Case1TargetFlagsAgreeWithTheGoldTable) {
  ScenarioOutcome out = RunCase1();
  const auto& de = out.report.results.at("deanonymization");
  const PhiTable& gold = testing::Fixture100().gold;
  std::map<std::string, const Document*> docs;
  for (const Document& d : Case1Data().masked.documents) docs[d.doc_id] = &d;

  size_t doc_hits = 0, pmh_hits = 0;
  for (const auto& t : de.at("per_target")) {
    const int pid = t.at("patient_id").get<int>();
    const PhiRecord& g = *gold.Find(pid);
    bool doc_ok = false, pmh_ok = false;
    if (t.at("resolved").get<bool>()) {
      const Document& d = *docs.at(t.at("doc_id").get<std::string>());
      doc_ok = d.patient_id == pid;
      pmh_ok = ConditionsIn(d.text) == std::set<std::string>(g.pmh.begin(), g.pmh.end());
    }
    EXPECT_EQ(t.at("document_correct").get<bool>(), doc_ok) << pid;
    EXPECT_EQ(t.at("pmh_correct").get<bool>(), pmh_ok) << pid;
    doc_hits += doc_ok;
    pmh_hits += pmh_ok;
  }
  const double n = static_cast<double>(de.at("per_target").size());
  EXPECT_DOUBLE_EQ(de.at("document_accuracy").get<double>(), doc_hits / n);
  EXPECT_DOUBLE_EQ(de.at("pmh_accuracy").get<double>(), pmh_hits / n);
  EXPECT_EQ(out.attacker_table.role, TableRole::kAttackerEstimate);
  EXPECT_EQ(out.attacker_table.rows.size(), gold.rows.size());
  EXPECT_TRUE(out.report.mean_kl.has_value());
  EXPECT_TRUE(out.report.baseline.has_value());
  EXPECT_EQ(out.report.provenance.at("plan").at("strategy"), "deanonymize_public");
}

TEST(ScenarioTest, RunsAreByteIdentical) {
  EXPECT_EQ(RunCase1().report.ToJsonText(), RunCase1().report.ToJsonText());
}

TEST(ScenarioTest, PublicCorpusMustCarryThePublicOperator) {
  const Case1World& c = Case1Data();
  KartScenario s = Case1();
  RunContext ctx = Context();
  World world;
  world.model = c.model.get();
  world.public_corpus = &testing::Fixture100().filled;  // provenance a' = id
  world.gold = &testing::Fixture100().gold;
  WorldProvider provider(world, s, ctx);
  try {
    RunScenario(s, provider, ctx);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConsistency);
  }
  world.public_corpus = nullptr;
  WorldProvider bare(world, s, ctx);
  try {
    RunScenario(s, bare, ctx);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPlanResource);
  }
}

TEST(ScenarioTest, VisitedMembershipIsNotedInProvenance) {
  const Case2World& w = Case2Data();
  KartScenario s = Case2();
  s.resources.clear();
  s.knowledge.membership = "visited";
  RunContext ctx = Context();
  World world;
  world.private_corpus = &w.priv.filled;
  world.gold = &w.priv.gold;
  WorldProvider provider(world, s, ctx);
  ScenarioOutcome out = RunScenario(s, provider, ctx);
  EXPECT_TRUE(out.report.provenance.contains("notes"));
}

}  // namespace
}  // namespace kart
