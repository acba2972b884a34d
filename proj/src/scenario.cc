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

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kart/error.h"
#include "kart/io.h"
#include "kart/train.h"
#include "toml_util.h"

namespace kart {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 3> kMembershipLevels = {"unknown", "visited", "in_corpus"};
constexpr std::array<std::string_view, 2> kResources = {kPublicResource, kShadowResource};
constexpr std::array<std::string_view, 7> kProbeCategories = {
    "phone", "fax", "ssn", "mrn", "email", "health_plan", "account"};

bool IsKnownCategory(const std::string& c) {
  return c == kMembershipCategory || NonMedicalCategories().contains(c) ||
         MedicalCategories().contains(c);
}

template <size_t N>
bool OneOf(const std::array<std::string_view, N>& list, std::string_view value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

HipaaCategory ProbeCategory(const std::string& name) {
  if (auto c = ParseHipaaCategory(name)) return *c;
  throw Error(ErrorKind::kScenario, fmt::format("'{}' is not an identifier category", name));
}

std::set<std::string> StringSet(const toml::table& t, std::string_view key) {
  if (!t.contains(key)) return {};
  auto v = TomlReader::Strings(t, key);
  return {v.begin(), v.end()};
}

AnonymizationOp ParseOp(const toml::table& t, std::string_view key) {
  const toml::node* node = t.get(key);
  if (auto s = node->value<std::string>()) return AnonymizationOp::Parse(*s);
  if (const toml::table* custom = node->as_table()) {
    TomlReader::CheckKeys(*custom, fmt::format("anonymization.{}", key), {"custom"});
    std::set<HipaaCategory> cats;
    for (const std::string& name : TomlReader::Strings(*custom, "custom")) {
      auto c = ParseHipaaCategory(name);
      if (!c) {
        throw Error(ErrorKind::kConfiguration,
                    fmt::format("unknown identifier category '{}' in anonymization.{}", name, key));
      }
      cats.insert(*c);
    }
    return AnonymizationOp::Custom(std::move(cats));
  }
  throw Error(ErrorKind::kConfiguration,
              fmt::format("anonymization.{} must be \"id\", \"hipaa\" or {{custom = [...]}}", key));
}

bool KnowsFullName(const KartScenario& s) {
  const auto& k = s.knowledge.categories;
  return k.contains("full_name") || k.contains("names") ||
         (k.contains("first_name") && k.contains("last_name"));
}

std::string Join(const std::set<std::string>& items) {
  std::string out;
  for (const std::string& i : items) out += (out.empty() ? "" : ",") + i;
  return out;
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  for (double d : v) out += (out.empty() ? "" : ",") + fmt::format("{}", d);
  return out;
}

Json HitsJson(const std::vector<AssociationHit>& hits) {
  Json out = Json::array();
  for (const AssociationHit& h : hits) out.push_back({{"identifier", h.identifier}, {"probability", h.probability}});
  return out;
}

void RunDeanonymization(const KartScenario& s, ResourceProvider& resources, const RunContext& ctx,
                        const ScorerModel& model, ScenarioOutcome& out) {
  const Corpus* pub = resources.PublicCorpus();
  if (pub == nullptr) {
    throw Error(ErrorKind::kPlanResource, "the plan needs d_public but the world has no public corpus");
  }
  if (pub->provenance.anonymizer != s.public_anonymization.Describe()) {
    throw Error(ErrorKind::kConsistency,
                fmt::format("public corpus was anonymized with '{}', the scenario fixes a' = '{}'",
                            pub->provenance.anonymizer, s.public_anonymization.Describe()));
  }
  const PhiTable& gold = resources.Gold();
  const NameLexicon& lexicon = *ctx.lexicon;
  AttackReport& report = out.report;

  const auto targeted = SelectTargetedMentions(ExtractFullNameMentions(*pub, ctx.tokenizer, &gold),
                                               lexicon, s.attack.seed);
  report.n_mentions = targeted.size();
  Json inversion = Json::array();
  if (!targeted.empty()) {
    const InversionResult inv = InvertNames(model, targeted, lexicon, s.attack.ranking_k, ctx.parallel);
    report.topk_accuracy = TopKAccuracy(inv.rankings, s.attack.top_ks);
    report.rank_percent = RankPercent(inv.rankings, lexicon.GridSize());
    report.mean_kl = MeanKlToPopularity(inv.posteriors, PopularityPrior(lexicon), ctx.parallel);
    if (model.supports_full_vocab()) {
      double mass = 0.0;
      for (const NamePosterior& p : inv.posteriors) mass += p.unnormalized_mass;
      report.mean_unnormalized_mass = mass / static_cast<double>(inv.posteriors.size());
    }
    std::vector<std::pair<std::string, std::string>> gold_names;
    for (size_t i = 0; i < targeted.size(); ++i) {
      gold_names.emplace_back(targeted[i].gold_first, targeted[i].gold_last);
      const CandidateRanking& r = inv.rankings[i];
      inversion.push_back({{"mention_id", r.mention_id},
                           {"patient_id", targeted[i].patient_id},
                           {"gold_rank", r.gold_rank},
                           {"top1", r.entries.front().first + " " + r.entries.front().last}});
    }
    report.baseline = PopularNameBaseline(lexicon, gold_names, s.attack.top_ks);
  }

  PhiTable knowledge;
  knowledge.role = TableRole::kAttackerEstimate;
  const bool knows_sex = s.knowledge.categories.contains("sex");
  const bool knows_age = s.knowledge.categories.contains("age");
  for (const PhiRecord& g : gold.rows) {
    PhiRecord k;
    k.patient_id = g.patient_id;
    k.first_name = g.first_name;
    k.last_name = g.last_name;
    if (knows_sex) k.sex = g.sex;
    if (knows_age) k.age = g.age;
    knowledge.rows.push_back(std::move(k));
  }
  const DeanonymizationResult de =
      DeanonymizeDocuments(model, *pub, knowledge, ctx.tokenizer, *ctx.clinical, {}, ctx.parallel);

  std::map<std::string, int> doc_patient;
  for (const Document& d : pub->documents) doc_patient[d.doc_id] = d.patient_id;
  size_t resolved = 0, doc_hits = 0, pmh_hits = 0;
  Json targets = Json::array();
  for (const DeanonymizedTarget& t : de.targets) {
    const PhiRecord& g = *gold.Find(t.patient_id);
    const bool doc_ok = t.resolved && doc_patient.at(t.doc_id) == t.patient_id;
    std::set<std::string> est(t.estimated_pmh.begin(), t.estimated_pmh.end());
    const bool pmh_ok = t.resolved && est == std::set<std::string>(g.pmh.begin(), g.pmh.end());
    resolved += t.resolved;
    doc_hits += doc_ok;
    pmh_hits += pmh_ok;
    targets.push_back({{"patient_id", t.patient_id},
                       {"resolved", t.resolved},
                       {"doc_id", t.resolved ? Json(t.doc_id) : Json(nullptr)},
                       {"candidate_documents", t.candidate_documents},
                       {"estimated_pmh", t.estimated_pmh},
                       {"document_correct", doc_ok},
                       {"pmh_correct", pmh_ok}});
  }
  const double n = std::max<double>(1.0, static_cast<double>(de.targets.size()));
  report.results["name_inversion"] = std::move(inversion);
  report.results["deanonymization"] = {{"targets", de.targets.size()},
                                       {"resolved", resolved},
                                       {"document_accuracy", static_cast<double>(doc_hits) / n},
                                       {"pmh_accuracy", static_cast<double>(pmh_hits) / n},
                                       {"per_target", std::move(targets)}};
  out.attacker_table = de.estimates;
}

void RunAssociation(const KartScenario& s, const AttackPlan& plan, ResourceProvider& resources,
                    const RunContext& ctx, const ScorerModel& model, ScenarioOutcome& out) {
  const std::string& condition = *s.target.condition;
  Json association = Json::object();
  for (const std::string& name : s.target.categories) {
    const HipaaCategory category = ProbeCategory(name);
    double p0 = s.attack.p0;
    if (plan.strategy == Strategy::kShadowAssisted) {
      const Corpus* shadow = resources.ShadowCorpus();
      const PhiTable* shadow_gold = resources.ShadowGold();
      if (shadow == nullptr || shadow_gold == nullptr) {
        throw Error(ErrorKind::kPlanResource,
                    "the plan needs d_shadow but the world has no shadow corpus and gold table");
      }
      ShadowSpec spec{condition, category, s.attack.p0_grid, s.attack.prompt};
      const CalibrationResult cal =
          ShadowCalibrate(*shadow, *shadow_gold, spec, s.training, *ctx.lexicon, ctx.tokenizer);
      p0 = cal.chosen.p0;
      Json grid = Json::array();
      for (const CalibrationPoint& pt : cal.grid) {
        grid.push_back({{"p0", pt.p0}, {"precision", pt.precision}, {"recall", pt.recall},
                        {"f1", pt.f1}, {"predicted", pt.predicted}});
      }
      out.report.results["calibration"][name] = {{"shadow_model_id", cal.shadow_model_id},
                                                 {"p0", cal.chosen.p0},
                                                 {"f1", cal.chosen.f1},
                                                 {"grid", std::move(grid)}};
    }
    const std::vector<std::string> candidates = IdentifierCandidates(model.vocabulary(), category);
    if (candidates.empty()) {
      throw Error(ErrorKind::kDegenerate,
                  fmt::format("the model vocabulary has no {}-shaped tokens", name));
    }
    const auto hits = AssociationAttack(model, condition, candidates, p0, ctx.tokenizer, s.attack.prompt);
    const auto gold_list = GoldAssociations(resources.Gold(), condition, category);
    const std::set<std::string> gold(gold_list.begin(), gold_list.end());
    size_t tp = 0;
    std::vector<std::string> recovered;
    for (const AssociationHit& h : hits) {
      if (gold.contains(h.identifier)) {
        ++tp;
        recovered.push_back(h.identifier);
      }
    }
    const double precision = hits.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(hits.size());
    const double recall = gold.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(gold.size());
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    association[name] = {{"condition", condition},
                         {"p0", p0},
                         {"candidates", candidates.size()},
                         {"hits", HitsJson(hits)},
                         {"gold", gold_list},
                         {"recovered", recovered},
                         {"precision", precision},
                         {"recall", recall},
                         {"f1", f1}};
  }
  out.report.results["association"] = std::move(association);
}

}  // namespace

const std::set<std::string>& NonMedicalCategories() {
  static const auto* set = [] {
    auto* s = new std::set<std::string>{"full_name", "first_name", "last_name", "age", "sex"};
    for (HipaaCategory c : kAllHipaaCategories) s->insert(std::string(HipaaCategoryName(c)));
    for (PhiField f : kAllPhiFields) s->insert(std::string(PhiFieldName(f)));
    return s;
  }();
  return *set;
}

const std::set<std::string>& MedicalCategories() {
  static const auto* set = new std::set<std::string>{"pmh", "medications"};
  return *set;
}

KartScenario ParseScenario(std::string_view toml_text) {
  using R = TomlReader;
  const toml::table root = ParseToml(toml_text, "scenario");
  R::CheckKeys(root, "scenario",
               {"name", "knowledge", "anonymization", "resources", "target", "attack", "training"});
  KartScenario s;
  s.name = R::Get<std::string>(root, "name").value_or("");
  if (const toml::table* t = root["knowledge"].as_table()) {
    R::CheckKeys(*t, "[knowledge]", {"categories", "membership"});
    s.knowledge.categories = StringSet(*t, "categories");
    s.knowledge.membership = R::Get<std::string>(*t, "membership").value_or("unknown");
  }
  if (const toml::table* t = root["anonymization"].as_table()) {
    R::CheckKeys(*t, "[anonymization]", {"a", "public"});
    if (t->contains("a")) s.anonymization = ParseOp(*t, "a");
    if (t->contains("public")) s.public_anonymization = ParseOp(*t, "public");
  }
  if (const toml::table* t = root["resources"].as_table()) {
    R::CheckKeys(*t, "[resources]", {"available"});
    s.resources = StringSet(*t, "available");
  }
  if (const toml::table* t = root["target"].as_table()) {
    R::CheckKeys(*t, "[target]", {"categories", "condition"});
    s.target.categories = StringSet(*t, "categories");
    s.target.condition = R::Get<std::string>(*t, "condition");
  }
  if (const toml::table* t = root["attack"].as_table()) {
    R::CheckKeys(*t, "[attack]", {"p0", "top_ks", "ranking_k", "seed", "p0_grid", "prompt"});
    if (auto v = R::Get<double>(*t, "p0")) s.attack.p0 = *v;
    if (t->contains("top_ks")) {
      s.attack.top_ks.clear();
      for (int64_t k : R::Numbers<int64_t>(*t, "top_ks")) {
        if (k < 0) throw Error(ErrorKind::kConfiguration, "attack.top_ks must be non-negative");
        s.attack.top_ks.push_back(static_cast<size_t>(k));
      }
    }
    if (auto v = R::Get<int64_t>(*t, "ranking_k")) {
      if (*v < 0) throw Error(ErrorKind::kConfiguration, "attack.ranking_k must be non-negative");
      s.attack.ranking_k = static_cast<size_t>(*v);
    }
    if (auto v = R::Get<int64_t>(*t, "seed")) s.attack.seed = static_cast<uint64_t>(*v);
    if (t->contains("p0_grid")) s.attack.p0_grid = R::Numbers<double>(*t, "p0_grid");
    if (auto v = R::Get<std::string>(*t, "prompt")) s.attack.prompt = *v;
  }
  if (const toml::table* t = root["training"].as_table()) ReadTrainingConfig(*t, "[training]", s.training);
  return s;
}

KartScenario LoadScenario(const std::filesystem::path& path) { return ParseScenario(ReadFile(path)); }

Json ScenarioJson(const KartScenario& s) {
  return Json{{"name", s.name},
              {"knowledge",
               {{"categories", s.knowledge.categories}, {"membership", s.knowledge.membership}}},
              {"anonymization",
               {{"a", s.anonymization.Describe()}, {"public", s.public_anonymization.Describe()}}},
              {"resources", s.resources},
              {"target",
               {{"categories", s.target.categories},
                {"condition", s.target.condition ? Json(*s.target.condition) : Json(nullptr)}}},
              {"attack",
               {{"p0", s.attack.p0},
                {"top_ks", s.attack.top_ks},
                {"ranking_k", s.attack.ranking_k},
                {"seed", s.attack.seed},
                {"p0_grid", s.attack.p0_grid},
                {"prompt", s.attack.prompt}}}};
}

std::vector<std::string> ValidateScenario(const KartScenario& s) {
  std::vector<std::string> v;
  for (const std::string& c : s.knowledge.categories) {
    if (!IsKnownCategory(c)) v.push_back(fmt::format("unknown knowledge category '{}'", c));
  }
  if (!OneOf(kMembershipLevels, s.knowledge.membership)) {
    v.push_back(fmt::format("membership must be unknown, visited or in_corpus (got '{}')",
                            s.knowledge.membership));
  }
  for (const auto& [label, op] : {std::pair{"anonymization", &s.anonymization},
                                  std::pair{"public_anonymization", &s.public_anonymization}}) {
    try {
      op->Validate();
    } catch (const Error& e) {
      v.push_back(fmt::format("{}: {}", label, e.what()));
    }
  }
  for (const std::string& r : s.resources) {
    if (!OneOf(kResources, r)) v.push_back(fmt::format("unknown resource '{}'", r));
  }
  const bool has_public = s.resources.contains(std::string(kPublicResource));
  const bool has_shadow = s.resources.contains(std::string(kShadowResource));
  if (has_public && s.public_anonymization.kind != AnonymizerKind::kHipaa) {
    v.push_back("public_anonymization must be hipaa when d_public is a resource");
  }
  if (s.target.categories.empty()) v.push_back("target must be non-empty");
  for (const std::string& c : s.target.categories) {
    if (!IsKnownCategory(c)) v.push_back(fmt::format("unknown target category '{}'", c));
  }
  if (!(s.attack.p0 >= 0.0 && s.attack.p0 <= 1.0)) v.push_back("attack.p0 must lie in [0, 1]");
  if (s.attack.top_ks.empty() ||
      std::find(s.attack.top_ks.begin(), s.attack.top_ks.end(), 0) != s.attack.top_ks.end()) {
    v.push_back("attack.top_ks must list ranks of at least 1");
  }
  if (s.attack.ranking_k == 0) v.push_back("attack.ranking_k must be at least 1");
  try {
    s.training.Validate();
  } catch (const Error& e) {
    v.push_back(fmt::format("training: {}", e.what()));
  }

  if (has_public) {
    if (!KnowsFullName(s)) v.push_back("deanonymize_public needs the full name in knowledge");
    for (const std::string& c : s.target.categories) {
      if (c != "pmh" && IsKnownCategory(c)) {
        v.push_back(fmt::format("target '{}' is not recoverable by deanonymize_public", c));
      }
    }
  } else {
    for (const std::string& c : s.target.categories) {
      if (!OneOf(kProbeCategories, c) && IsKnownCategory(c)) {
        v.push_back(fmt::format("target '{}' is not recoverable by association probing", c));
      }
    }
    if (!s.target.condition || s.target.condition->empty()) {
      v.push_back("an association target needs a condition");
    }
    if (has_shadow) {
      if (s.attack.p0_grid.empty()) v.push_back("shadow calibration needs a non-empty attack.p0_grid");
      for (double p : s.attack.p0_grid) {
        if (!(p >= 0.0 && p <= 1.0)) {
          v.push_back(fmt::format("attack.p0_grid value {} lies outside [0, 1]", p));
        }
      }
    }
  }
  return v;
}

std::string_view StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kDeanonymizePublic:
      return "deanonymize_public";
    case Strategy::kDirectProbe:
      return "direct_probe";
    case Strategy::kShadowAssisted:
      return "shadow_assisted";
  }
  return "unknown";
}

AttackPlan CompilePlan(const KartScenario& s) {
  const std::vector<std::string> violations = ValidateScenario(s);
  if (!violations.empty()) {
    std::string msg = "invalid scenario";
    for (const std::string& v : violations) msg += "; " + v;
    throw Error(ErrorKind::kScenario, msg);
  }
  AttackPlan plan;
  if (s.resources.contains(std::string(kPublicResource))) {
    plan.strategy = Strategy::kDeanonymizePublic;
    std::set<std::string> filters;
    for (const char* f : {"sex", "age"}) {
      if (s.knowledge.categories.contains(f)) filters.insert(f);
    }
    plan.steps = {
        {"extract_full_name_mentions", {{"corpus", std::string(kPublicResource)}}},
        {"select_targeted_mentions", {{"seed", std::to_string(s.attack.seed)}}},
        {"compute_name_posteriors", {}},
        {"rank_candidates_topk", {{"k", std::to_string(s.attack.ranking_k)}}},
        {"deanonymize_documents", {{"filters", Join(filters)}}},
    };
    return plan;
  }
  const std::map<std::string, std::string> probe = {{"condition", *s.target.condition},
                                                    {"categories", Join(s.target.categories)}};
  if (s.resources.contains(std::string(kShadowResource))) {
    plan.strategy = Strategy::kShadowAssisted;
    auto calibrate = probe;
    calibrate["grid"] = JoinDoubles(s.attack.p0_grid);
    auto attack = probe;
    attack["p0"] = "calibrated";
    plan.steps = {{"shadow_calibrate", calibrate}, {"association_attack", attack}};
    return plan;
  }
  plan.strategy = Strategy::kDirectProbe;
  auto attack = probe;
  attack["p0"] = fmt::format("{}", s.attack.p0);
  plan.steps = {{"association_attack", attack}};
  return plan;
}

Json PlanJson(const AttackPlan& plan) {
  Json steps = Json::array();
  for (const PlanStep& s : plan.steps) {
    Json params = Json::object();
    for (const auto& [k, v] : s.params) params[k] = v;
    steps.push_back({{"op", s.op}, {"params", std::move(params)}});
  }
  return Json{{"strategy", std::string(StrategyName(plan.strategy))}, {"steps", std::move(steps)}};
}

WorldProvider::WorldProvider(const World& world, const KartScenario& scenario, const RunContext& context)
    : world_(world), scenario_(scenario), context_(context) {}

WorldProvider::~WorldProvider() = default;

const ScorerModel& WorldProvider::Model() {
  if (world_.model != nullptr) return *world_.model;
  if (!trained_) {
    if (world_.private_corpus == nullptr) {
      throw Error(ErrorKind::kPlanResource, "the world has neither a model nor a private corpus");
    }
    auto vocab = std::make_shared<const Vocabulary>(
        BuildVocabulary({world_.private_corpus}, *context_.lexicon, context_.tokenizer));
    trained_ = TrainModel(*world_.private_corpus, vocab, context_.tokenizer, scenario_.training);
  }
  return *trained_;
}

const PhiTable& WorldProvider::Gold() {
  if (world_.gold == nullptr) throw Error(ErrorKind::kPlanResource, "the world has no gold table");
  return *world_.gold;
}

ScenarioOutcome RunScenario(const KartScenario& scenario, ResourceProvider& resources,
                            const RunContext& context) {
  if (context.lexicon == nullptr || context.clinical == nullptr) {
    throw Error(ErrorKind::kConfiguration, "run context needs name and clinical lexicons");
  }
  const AttackPlan plan = CompilePlan(scenario);
  const ScorerModel& model = resources.Model();
  const std::string& trained_under = model.provenance().anonymizer;
  if (trained_under.empty()) {
    spdlog::info("model {} does not report its anonymizer; skipping the consistency check",
                 model.provenance().model_id);
  } else if (trained_under != scenario.anonymization.Describe()) {
    throw Error(ErrorKind::kConsistency,
                fmt::format("model {} was trained under a = '{}' but the scenario states a = '{}'",
                            model.provenance().model_id, trained_under,
                            scenario.anonymization.Describe()));
  }

  ScenarioOutcome out;
  out.attacker_table.role = TableRole::kAttackerEstimate;
  out.report.provenance["scenario"] = ScenarioJson(scenario);
  out.report.provenance["plan"] = PlanJson(plan);
  out.report.provenance["model"] = ProvenanceJson(model.provenance());
  if (scenario.knowledge.membership == "visited") {
    out.report.provenance["notes"] = {"membership level 'visited' is recorded but does not change the attack"};
  }
  spdlog::info("running scenario '{}' with strategy {}", scenario.name, StrategyName(plan.strategy));
  if (plan.strategy == Strategy::kDeanonymizePublic) {
    RunDeanonymization(scenario, resources, context, model, out);
  } else {
    RunAssociation(scenario, plan, resources, context, model, out);
  }
  return out;
}

}  // namespace kart
