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

#include "kart/cli.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "kart/anonymize.h"
#include "kart/attack.h"
#include "kart/corpus.h"
#include "kart/error.h"
#include "kart/external_scorer.h"
#include "kart/generator.h"
#include "kart/io.h"
#include "kart/kernels.h"
#include "kart/metrics.h"
#include "kart/model_io.h"
#include "kart/protocol.h"
#include "kart/protocol_server.h"
#include "kart/scenario.h"
#include "kart/train.h"

namespace kart {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

void ConfigureLogging() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("kart");
    spdlog::set_default_logger(l);
    return l;
  }();
  const char* env = std::getenv("KART_LOG");
  const std::string level = env == nullptr ? "info" : env;
  if (level == "error") {
    logger->set_level(spdlog::level::err);
  } else if (level == "info") {
    logger->set_level(spdlog::level::info);
  } else if (level == "debug") {
    logger->set_level(spdlog::level::debug);
  } else {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("KART_LOG must be error, info or debug (got '{}')", level));
  }
}

std::vector<size_t> ParseKs(const std::string& text) {
  std::vector<size_t> ks;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    size_t used = 0;
    unsigned long k = 0;
    try {
      k = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || k == 0) {
      throw Error(ErrorKind::kConfiguration, fmt::format("--ks entry '{}' is not a positive rank", item));
    }
    ks.push_back(k);
  }
  if (ks.empty()) throw Error(ErrorKind::kConfiguration, "--ks must list at least one rank");
  return ks;
}

struct ModelSource {
  std::string dir;
  std::string endpoint;

  void Register(CLI::App* cmd) {
    auto* m = cmd->add_option("--model", dir, "Model directory written by train-lm");
    auto* e = cmd->add_option("--endpoint", endpoint, "Protocol-1 scorer endpoint (http://host:port)");
    m->excludes(e);
  }

  bool given() const { return !dir.empty() || !endpoint.empty(); }

  std::unique_ptr<ScorerModel> Open() const {
    if (!endpoint.empty()) return ExternalScorer::Connect(endpoint);
    if (!dir.empty()) return LoadModel(dir);
    throw Error(ErrorKind::kConfiguration, "one of --model or --endpoint is required");
  }
};

// The name lexicon as seen by `model`: names must be single tokens of its
// vocabulary.
NameLexicon LexiconFor(const ScorerModel& model) {
  Tokenizer tokenizer;
  tokenizer.set_closed_vocabulary(std::make_shared<const Vocabulary>(model.vocabulary()));
  return LoadDefaultNameLexicon(tokenizer);
}

void WriteOutput(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    WriteFileAtomic(path, text);
    spdlog::info("wrote {}", path);
  }
}

std::string FormatReport(const AttackReport& report, const std::string& format) {
  return format == "csv" ? report.ToCsv() : report.ToJsonText();
}

// ---- gen-corpus ----------------------------------------------------------

struct GenCorpusArgs {
  std::string config;
  uint64_t seed = 0;
  std::optional<int> patients;
  std::optional<double> fill_rate;
  std::string out_dir;
};

void GenCorpus(const GenCorpusArgs& a) {
  GeneratorConfig config = a.config.empty() ? GeneratorConfig{} : LoadGeneratorConfig(a.config);
  config.seed = a.seed;
  if (a.patients) config.patients = *a.patients;
  if (a.fill_rate) config.fill_rate = *a.fill_rate;
  const GeneratedWorld world =
      GenerateWorld(config, LoadDefaultNameLexicon(), LoadDefaultPopulationSources());
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  SavePhiTable(world.gold, dir / "gold.jsonl");
  SaveCorpus(world.unfilled, dir / "unfilled.jsonl");
  SaveCorpus(world.filled, dir / "filled.jsonl");
  SaveCorpus(world.train, dir / "train.jsonl");
  SaveCorpus(world.val, dir / "val.jsonl");
  spdlog::info("generated {} patients, {} documents under {}", world.gold.rows.size(),
               world.filled.documents.size(), dir.string());
}

// ---- anonymize -----------------------------------------------------------

struct AnonymizeArgs {
  std::string in;
  std::string op = "hipaa";
  std::string out;
  std::string gold;
};

void Anonymize(const AnonymizeArgs& a, std::ostream& out) {
  const AnonymizationOp op = AnonymizationOp::Parse(a.op);
  const Corpus result = ApplyAnonymizer(LoadCorpus(a.in), op);
  SaveCorpus(result, a.out);
  if (!a.gold.empty()) {
    const auto hits = ScanForPhi(result, LoadPhiTable(a.gold), op.masked_categories);
    out << Json{{"anonymizer", op.Describe()}, {"residual_phi_hits", hits.size()}}.dump() << "\n";
  }
}

// ---- train-lm ------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::vector<std::string> vocab_corpora;
  std::string config;
  std::string kind;
  std::optional<int> steps;
  std::optional<double> learning_rate;
  std::optional<int> embedding_dim;
  std::optional<int> batch_size;
  std::optional<double> smoothing_k;
  uint64_t seed = 0;
  std::string out;
};

void TrainLm(const TrainArgs& a, bool parallel) {
  TrainingConfig config = a.config.empty() ? TrainingConfig{} : LoadTrainingConfig(a.config);
  if (!a.kind.empty()) {
    auto kind = ParseModelKind(a.kind);
    if (!kind) throw Error(ErrorKind::kConfiguration, fmt::format("unknown model kind '{}'", a.kind));
    config.model_kind = *kind;
  }
  if (a.steps) config.steps = *a.steps;
  if (a.learning_rate) config.learning_rate = *a.learning_rate;
  if (a.embedding_dim) config.embedding_dim = *a.embedding_dim;
  if (a.batch_size) config.batch_size = *a.batch_size;
  if (a.smoothing_k) config.smoothing_k = *a.smoothing_k;
  config.seed = a.seed;
  config.parallel = config.parallel || parallel;

  Tokenizer tokenizer;
  const Corpus corpus = LoadCorpus(a.corpus);
  std::vector<Corpus> extra;
  extra.reserve(a.vocab_corpora.size());
  for (const std::string& p : a.vocab_corpora) extra.push_back(LoadCorpus(p));
  std::vector<const Corpus*> all = {&corpus};
  for (const Corpus& c : extra) all.push_back(&c);
  auto vocab = std::make_shared<const Vocabulary>(
      BuildVocabulary(all, LoadDefaultNameLexicon(tokenizer), tokenizer));
  const auto model = TrainModel(corpus, vocab, tokenizer, config);
  SaveModel(*model, a.out);
  spdlog::info("trained {} ({} tokens) into {}", model->provenance().model_id, vocab->size(), a.out);
}

// ---- extract-mentions ----------------------------------------------------

struct ExtractArgs {
  std::string corpus;
  std::string gold;
  std::optional<uint64_t> seed;
  bool all = false;
  std::string out;
};

void ExtractMentions(const ExtractArgs& a) {
  if (!a.all && !a.seed) {
    throw Error(ErrorKind::kConfiguration, "--seed is required unless --all is given");
  }
  Tokenizer tokenizer;
  const Corpus corpus = LoadCorpus(a.corpus);
  std::optional<PhiTable> gold;
  if (!a.gold.empty()) gold = LoadPhiTable(a.gold);
  auto mentions = ExtractFullNameMentions(corpus, tokenizer, gold ? &*gold : nullptr);
  if (!a.all) mentions = SelectTargetedMentions(mentions, LoadDefaultNameLexicon(tokenizer), *a.seed);
  SaveMentions(mentions, a.out);
  spdlog::info("extracted {} mentions", mentions.size());
}

// ---- attack invert-names -------------------------------------------------

struct InvertArgs {
  ModelSource model;
  std::string mentions;
  size_t top_k = 100;
  std::string out;
};

void InvertNamesCmd(const InvertArgs& a, bool parallel) {
  const auto model = a.model.Open();
  const NameLexicon lexicon = LexiconFor(*model);
  const InversionResult inv = InvertNames(*model, LoadMentions(a.mentions), lexicon, a.top_k, parallel);
  SaveRankings(inv.rankings, a.out);
  spdlog::info("ranked {} mentions", inv.rankings.size());
}

// ---- attack associate ----------------------------------------------------

struct AssociateArgs {
  ModelSource model;
  std::string condition;
  std::string category = "phone";
  double p0 = 0.5;
  std::string prompt = std::string(kDefaultAssociationPrompt);
  std::string gold;
  std::string out;
};

void Associate(const AssociateArgs& a, std::ostream& out) {
  auto category = ParseHipaaCategory(a.category);
  if (!category) {
    throw Error(ErrorKind::kConfiguration, fmt::format("unknown identifier category '{}'", a.category));
  }
  const auto model = a.model.Open();
  const auto candidates = IdentifierCandidates(model->vocabulary(), *category);
  const auto hits = AssociationAttack(*model, a.condition, candidates, a.p0, Tokenizer(), a.prompt);
  Json j{{"condition", a.condition}, {"category", a.category}, {"p0", a.p0},
         {"candidates", candidates.size()}, {"hits", Json::array()}};
  for (const AssociationHit& h : hits) {
    j["hits"].push_back({{"identifier", h.identifier}, {"probability", h.probability}});
  }
  if (!a.gold.empty()) {
    const auto gold = GoldAssociations(LoadPhiTable(a.gold), a.condition, *category);
    const std::set<std::string> gold_set(gold.begin(), gold.end());
    size_t tp = 0;
    for (const AssociationHit& h : hits) tp += gold_set.contains(h.identifier);
    const double precision = hits.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(hits.size());
    const double recall = gold.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(gold.size());
    j["gold"] = gold;
    j["precision"] = precision;
    j["recall"] = recall;
    j["f1"] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  WriteOutput(a.out, j.dump(2) + "\n", out);
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string rankings;
  std::string mentions;
  ModelSource model;
  std::string ks = "1,10,100,1000";
  std::string format = "json";
  std::string out;
};

void Eval(const EvalArgs& a, bool parallel, std::ostream& out) {
  const std::vector<size_t> ks = ParseKs(a.ks);
  const auto rankings = LoadRankings(a.rankings);
  std::unique_ptr<ScorerModel> model;
  if (a.model.given()) {
    if (a.mentions.empty()) throw Error(ErrorKind::kConfiguration, "--model/--endpoint needs --mentions");
    model = a.model.Open();
  }
  const NameLexicon lexicon = model ? LexiconFor(*model) : LoadDefaultNameLexicon();

  AttackReport report;
  report.n_mentions = rankings.size();
  report.topk_accuracy = TopKAccuracy(rankings, ks);
  report.rank_percent = RankPercent(rankings, lexicon.GridSize());
  Json inputs{{"rankings", a.rankings}};
  if (!a.mentions.empty()) {
    const auto mentions = LoadMentions(a.mentions);
    if (mentions.size() != rankings.size()) {
      throw Error(ErrorKind::kDataIntegrity, fmt::format("{} mentions but {} rankings", mentions.size(),
                                                         rankings.size()));
    }
    std::vector<std::pair<std::string, std::string>> gold;
    for (size_t i = 0; i < mentions.size(); ++i) {
      if (mentions[i].mention_id != rankings[i].mention_id) {
        throw Error(ErrorKind::kDataIntegrity,
                    fmt::format("mention {} does not match ranking {}", mentions[i].mention_id,
                                rankings[i].mention_id));
      }
      gold.emplace_back(mentions[i].gold_first, mentions[i].gold_last);
    }
    report.baseline = PopularNameBaseline(lexicon, gold, ks);
    inputs["mentions"] = a.mentions;
    if (model) {
      const auto posteriors = ComputeNamePosteriorsBatch(*model, mentions, lexicon, parallel);
      report.mean_kl = MeanKlToPopularity(posteriors, PopularityPrior(lexicon), parallel);
      if (model->supports_full_vocab()) {
        double mass = 0.0;
        for (const NamePosterior& p : posteriors) mass += p.unnormalized_mass;
        report.mean_unnormalized_mass = mass / static_cast<double>(posteriors.size());
      }
      report.provenance["model"] = ProvenanceJson(model->provenance());
    }
  }
  report.provenance["inputs"] = std::move(inputs);
  WriteOutput(a.out, FormatReport(report, a.format), out);
}

// ---- embed-dist ----------------------------------------------------------

struct EmbedDistArgs {
  std::string model_a;
  std::string model_b;
  std::string tokens;
  std::string mentions;
  std::string out;
};

void EmbedDist(const EmbedDistArgs& a, std::ostream& out) {
  const auto ma = LoadModel(a.model_a);
  const auto mb = LoadModel(a.model_b);
  std::set<std::string> tokens;
  if (!a.tokens.empty()) {
    for (const std::string& t : protocol::SplitTokensParam(a.tokens)) tokens.insert(t);
  }
  if (!a.mentions.empty()) {
    for (const FullNameMention& m : LoadMentions(a.mentions)) {
      tokens.insert(m.gold_first);
      tokens.insert(m.gold_last);
    }
  }
  if (tokens.empty()) throw Error(ErrorKind::kConfiguration, "give --tokens or --mentions");
  const std::vector<std::string> list(tokens.begin(), tokens.end());
  const double d = EmbeddingDistance(*ma, *mb, list);
  const Json j{{"model_a", ma->provenance().model_id},
               {"model_b", mb->provenance().model_id},
               {"tokens", list.size()},
               {"distance", d}};
  WriteOutput(a.out, j.dump(2) + "\n", out);
}

// ---- scenario run --------------------------------------------------------

struct ScenarioArgs {
  std::string scenario;
  uint64_t seed = 0;
  std::string gold;
  std::string private_corpus;
  std::string public_corpus;
  std::string shadow_corpus;
  std::string shadow_gold;
  ModelSource model;
  std::string format = "json";
  std::string out;
  std::string attacker_out;
};

void ScenarioRun(const ScenarioArgs& a, bool parallel, std::ostream& out) {
  KartScenario scenario = LoadScenario(a.scenario);
  scenario.attack.seed = a.seed;

  std::optional<Corpus> private_corpus, public_corpus, shadow_corpus;
  std::optional<PhiTable> gold, shadow_gold;
  if (!a.private_corpus.empty()) private_corpus = LoadCorpus(a.private_corpus);
  if (!a.public_corpus.empty()) public_corpus = LoadCorpus(a.public_corpus);
  if (!a.shadow_corpus.empty()) shadow_corpus = LoadCorpus(a.shadow_corpus);
  if (!a.gold.empty()) gold = LoadPhiTable(a.gold);
  if (!a.shadow_gold.empty()) shadow_gold = LoadPhiTable(a.shadow_gold);
  std::unique_ptr<ScorerModel> model;
  if (a.model.given()) model = a.model.Open();

  const NameLexicon lexicon = LoadDefaultNameLexicon();
  const ClinicalLexicon clinical = LoadDefaultClinicalLexicon();
  RunContext context{&lexicon, &clinical, Tokenizer(), parallel};
  World world;
  world.private_corpus = private_corpus ? &*private_corpus : nullptr;
  world.public_corpus = public_corpus ? &*public_corpus : nullptr;
  world.shadow_corpus = shadow_corpus ? &*shadow_corpus : nullptr;
  world.shadow_gold = shadow_gold ? &*shadow_gold : nullptr;
  world.gold = gold ? &*gold : nullptr;
  world.model = model.get();
  WorldProvider provider(world, scenario, context);
  const ScenarioOutcome outcome = RunScenario(scenario, provider, context);
  WriteOutput(a.out, FormatReport(outcome.report, a.format), out);
  if (!a.attacker_out.empty()) SavePhiTable(outcome.attacker_table, a.attacker_out);
}

// ---- scorer serve-check --------------------------------------------------

struct ServeCheckArgs {
  ModelSource model;
  double timeout = 10.0;
};

// Conformance checks against a protocol-1 endpoint. With --model the model
// is served locally first and its in-process scores become the reference.
int ServeCheck(const ServeCheckArgs& a, std::ostream& out) {
  std::unique_ptr<ScorerModel> local;
  std::unique_ptr<ProtocolServer> server;
  std::string endpoint = a.model.endpoint;
  if (!a.model.dir.empty()) {
    local = LoadModel(a.model.dir);
    server = std::make_unique<ProtocolServer>(*local);
    endpoint = server->endpoint();
  }
  if (endpoint.empty()) throw Error(ErrorKind::kConfiguration, "one of --model or --endpoint is required");

  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) out << ": " << detail;
    out << "\n";
    failures += !ok;
  };

  ExternalScorerOptions options;
  options.timeout_seconds = a.timeout;
  std::unique_ptr<ExternalScorer> remote;
  try {
    remote = ExternalScorer::Connect(endpoint, options);
    report("health handshake", true, remote->provenance().model_id);
  } catch (const Error& e) {
    report("health handshake", false, e.what());
    return 2;
  }
  report("vocab", !remote->server_tokens().empty(),
         fmt::format("{} tokens", remote->server_tokens().size()));

  const std::vector<std::string> probe = {"[CLS]", "the", "patient", "[MASK]", ".", "[SEP]"};
  try {
    const ScoreResult r = ScoreMasked(*remote, probe, {3}, {{3, FullVocab{}}});
    double total = 0.0;
    for (double lp : r.at(3).log_probs) total += std::exp(lp);
    report("score normalization", std::abs(total - 1.0) <= 1e-6, fmt::format("sum {:.12f}", total));
    if (local) {
      const ScoreResult ref = ScoreMasked(*local, probe, {3}, {{3, FullVocab{}}});
      std::map<std::string, double> by_token;
      for (size_t i = 0; i < ref.at(3).tokens.size(); ++i) by_token[ref.at(3).tokens[i]] = ref.at(3).log_probs[i];
      double worst = 0.0;
      for (size_t i = 0; i < r.at(3).tokens.size(); ++i) {
        auto it = by_token.find(r.at(3).tokens[i]);
        if (it == by_token.end() || std::isinf(it->second)) continue;
        worst = std::max(worst, std::abs(it->second - r.at(3).log_probs[i]));
      }
      report("in-process parity", worst <= 1e-12, fmt::format("max |diff| {:.3g}", worst));
    }
  } catch (const Error& e) {
    report("score normalization", false, e.what());
  }

  httplib::Client client(endpoint);
  client.set_read_timeout(static_cast<time_t>(a.timeout));
  const httplib::Headers headers = {{std::string(protocol::kHeader), std::to_string(protocol::kVersion)}};
  protocol::ScoreRequest bad;
  bad.tokens = probe;
  bad.mask_positions = {probe.size() + 5};
  auto res = client.Post("/score", headers, protocol::ToJson(bad).dump(), "application/json");
  report("malformed mask position rejected", res && res->status == 400,
         res ? fmt::format("HTTP {}", res->status) : httplib::to_string(res.error()));
  report("protocol header", res && res->get_header_value(std::string(protocol::kHeader)) ==
                                       std::to_string(protocol::kVersion),
         "");
  return failures == 0 ? 0 : 2;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kart: privacy-leakage harness for clinical masked language models", "kart"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for parallel kernels (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  std::function<int()> action;

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic patient population and corpus");
  gen_cmd->add_option("--config", gen.config, "Generator TOML")->check(CLI::ExistingFile);
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->required();
  gen_cmd->add_option("--patients", gen.patients, "Override the population size");
  gen_cmd->add_option("--fill-rate", gen.fill_rate, "Override the placeholder fill rate");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  gen_cmd->callback([&] { action = [&] { GenCorpus(gen); return 0; }; });

  AnonymizeArgs anon;
  auto* anon_cmd = app.add_subcommand("anonymize", "Apply an anonymization operator to a corpus");
  anon_cmd->add_option("--in", anon.in, "Input corpus")->required()->check(CLI::ExistingFile);
  anon_cmd->add_option("--op", anon.op, "id, hipaa or custom:<cat>+<cat>");
  anon_cmd->add_option("--out", anon.out, "Output corpus")->required();
  anon_cmd->add_option("--gold", anon.gold, "Gold table; prints residual PHI hits")->check(CLI::ExistingFile);
  anon_cmd->callback([&] { action = [&] { Anonymize(anon, out); return 0; }; });

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-lm", "Train a scorer and write its model directory");
  train_cmd->add_option("--corpus", train.corpus, "Training corpus")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--vocab-corpus", train.vocab_corpora,
                        "Extra corpora whose words join the vocabulary")->check(CLI::ExistingFile);
  train_cmd->add_option("--config", train.config, "Training TOML")->check(CLI::ExistingFile);
  train_cmd->add_option("--kind", train.kind, "count_nb, tiny_mlm or uniform");
  train_cmd->add_option("--steps", train.steps);
  train_cmd->add_option("--learning-rate", train.learning_rate);
  train_cmd->add_option("--embedding-dim", train.embedding_dim);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--smoothing-k", train.smoothing_k);
  train_cmd->add_option("--seed", train.seed, "Training seed")->required();
  train_cmd->add_option("--out", train.out, "Model directory")->required();
  train_cmd->callback([&] { action = [&] { TrainLm(train, threads > 1); return 0; }; });

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract-mentions", "Extract targeted full-name mentions");
  extract_cmd->add_option("--corpus", extract.corpus)->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--gold", extract.gold, "Gold table supplying names")->check(CLI::ExistingFile);
  extract_cmd->add_option("--seed", extract.seed, "Seed for the one-per-patient selection");
  extract_cmd->add_flag("--all", extract.all, "Keep every mention instead of one per patient");
  extract_cmd->add_option("--out", extract.out)->required();
  extract_cmd->callback([&] { action = [&] { ExtractMentions(extract); return 0; }; });

  auto* attack_cmd = app.add_subcommand("attack", "Run an attack");
  attack_cmd->require_subcommand(1);
  InvertArgs invert;
  auto* invert_cmd = attack_cmd->add_subcommand("invert-names", "Rank candidate names per mention");
  invert.model.Register(invert_cmd);
  invert_cmd->add_option("--mentions", invert.mentions)->required()->check(CLI::ExistingFile);
  invert_cmd->add_option("--top-k", invert.top_k, "Entries kept per ranking")->check(CLI::PositiveNumber);
  invert_cmd->add_option("--out", invert.out)->required();
  invert_cmd->callback([&] { action = [&] { InvertNamesCmd(invert, threads > 1); return 0; }; });

  AssociateArgs assoc;
  auto* assoc_cmd = attack_cmd->add_subcommand("associate", "Probe identifiers associated with a condition");
  assoc.model.Register(assoc_cmd);
  assoc_cmd->add_option("--condition", assoc.condition)->required();
  assoc_cmd->add_option("--category", assoc.category, "Identifier category");
  assoc_cmd->add_option("--p0", assoc.p0, "Probability threshold")->check(CLI::Range(0.0, 1.0));
  assoc_cmd->add_option("--prompt", assoc.prompt, "Prompt with {condition} and one [MASK]");
  assoc_cmd->add_option("--gold", assoc.gold, "Gold table for precision/recall")->check(CLI::ExistingFile);
  assoc_cmd->add_option("--out", assoc.out, "Output JSON (stdout when omitted)");
  assoc_cmd->callback([&] { action = [&] { Associate(assoc, out); return 0; }; });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compute attack metrics from rankings");
  eval_cmd->add_option("--rankings", eval.rankings)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mentions", eval.mentions, "Mentions behind the rankings (enables the baseline)")
      ->check(CLI::ExistingFile);
  eval.model.Register(eval_cmd);
  eval_cmd->add_option("--ks", eval.ks, "Comma-separated top-k list");
  eval_cmd->add_option("--format", eval.format)->check(CLI::IsMember({"json", "csv"}));
  eval_cmd->add_option("--out", eval.out, "Report path (stdout when omitted)");
  eval_cmd->callback([&] { action = [&] { Eval(eval, threads > 1, out); return 0; }; });

  EmbedDistArgs embed;
  auto* embed_cmd = app.add_subcommand("embed-dist", "Mean embedding distance between two models");
  embed_cmd->add_option("--model-a", embed.model_a)->required()->check(CLI::ExistingDirectory);
  embed_cmd->add_option("--model-b", embed.model_b)->required()->check(CLI::ExistingDirectory);
  embed_cmd->add_option("--tokens", embed.tokens, "Comma-separated tokens");
  embed_cmd->add_option("--mentions", embed.mentions, "Use the gold names of these mentions")
      ->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", embed.out);
  embed_cmd->callback([&] { action = [&] { EmbedDist(embed, out); return 0; }; });

  auto* scenario_cmd = app.add_subcommand("scenario", "Scenario operations");
  scenario_cmd->require_subcommand(1);
  ScenarioArgs scen;
  auto* run_cmd = scenario_cmd->add_subcommand("run", "Compile and run a scenario");
  run_cmd->add_option("--scenario", scen.scenario)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", scen.seed, "Attack seed")->required();
  run_cmd->add_option("--gold", scen.gold)->check(CLI::ExistingFile);
  run_cmd->add_option("--private", scen.private_corpus, "Private corpus used to train M")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--public", scen.public_corpus)->check(CLI::ExistingFile);
  run_cmd->add_option("--shadow", scen.shadow_corpus)->check(CLI::ExistingFile);
  run_cmd->add_option("--shadow-gold", scen.shadow_gold)->check(CLI::ExistingFile);
  scen.model.Register(run_cmd);
  run_cmd->add_option("--format", scen.format)->check(CLI::IsMember({"json", "csv"}));
  run_cmd->add_option("--out", scen.out, "Report path (stdout when omitted)");
  run_cmd->add_option("--attacker-out", scen.attacker_out, "Attacker PHI table");
  run_cmd->callback([&] { action = [&] { ScenarioRun(scen, threads > 1, out); return 0; }; });

  auto* scorer_cmd = app.add_subcommand("scorer", "Scorer operations");
  scorer_cmd->require_subcommand(1);
  ServeCheckArgs check;
  auto* check_cmd = scorer_cmd->add_subcommand("serve-check", "Protocol conformance check");
  check.model.Register(check_cmd);
  check_cmd->add_option("--timeout", check.timeout, "Seconds per request");
  check_cmd->callback([&] { action = [&] { return ServeCheck(check, out); }; });

  std::vector<const char*> argv = {"kart"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? 0 : 1;
  }

  try {
    ConfigureLogging();
    kernels::SetThreadCount(threads);
    return action();
  } catch (const Error& e) {
    err << "kart: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "kart: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace kart
