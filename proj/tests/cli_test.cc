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

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "kart/attack.h"
#include "kart/io.h"
#include "kart/metrics.h"
#include "kart/scenario.h"
#include "test_support.h"

namespace kart {
namespace {

using Json = nlohmann::ordered_json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Kart(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Seed(const std::string& fixture) {
  return std::to_string(LoadGeneratorConfig(testing::FixturePath(fixture)).seed);
}

TEST(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(Kart({"--help"}).code, 0);
  EXPECT_EQ(Kart({}).code, 1);
  EXPECT_EQ(Kart({"gen-corpus", "--out-dir", "/tmp/x"}).code, 1);
  EXPECT_EQ(Kart({"gen-corpus", "--seed", "1", "--out-dir", "/tmp/x", "--bogus"}).code, 1);
  EXPECT_EQ(Kart({"eval", "--rankings", "/nonexistent/r.jsonl"}).code, 1);
}

TEST(CliTest, LibraryErrorsMapToExitCodes) {
  testing::TempDir dir;
  {
    std::ofstream(dir / "bad.jsonl") << "{not json\n";
  }
  CliRun r = Kart({"anonymize", "--in", (dir / "bad.jsonl").string(), "--out", (dir / "o.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("kart: "), std::string::npos);

  ASSERT_EQ(Kart({"gen-corpus", "--seed", "2", "--patients", "3", "--out-dir", (dir / "w").string()}).code, 0);
  {
    std::ofstream(dir / "file") << "x";
  }
  r = Kart({"anonymize", "--in", (dir / "w" / "filled.jsonl").string(), "--out",
            (dir / "file" / "o.jsonl").string()});
  EXPECT_EQ(r.code, 2) << r.err;

  r = Kart({"eval", "--rankings", (dir / "bad.jsonl").string(), "--ks", "1,0"});
  EXPECT_EQ(r.code, 1);
}

TEST(CliTest, ScenarioRunMatchesTheLibrary) {
  testing::TempDir dir;
  const std::string priv = (dir / "priv").string(), shadow = (dir / "shadow").string();
  ASSERT_EQ(Kart({"gen-corpus", "--config", testing::FixturePath("case2_private.toml").string(), "--seed",
                  Seed("case2_private.toml"), "--out-dir", priv})
                .code,
            0);
  ASSERT_EQ(Kart({"gen-corpus", "--config", testing::FixturePath("case2_shadow.toml").string(), "--seed",
                  Seed("case2_shadow.toml"), "--out-dir", shadow})
                .code,
            0);
  const std::string scenario = (testing::SourceDir() / "scenarios" / "case2.toml").string();
  CliRun r = Kart({"scenario", "run", "--scenario", scenario, "--seed", "11", "--private", priv + "/filled.jsonl",
                "--gold", priv + "/gold.jsonl", "--shadow", shadow + "/filled.jsonl", "--shadow-gold",
                shadow + "/gold.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;

  const GeneratedWorld p = testing::WorldFrom("case2_private.toml");
  const GeneratedWorld s = testing::WorldFrom("case2_shadow.toml");
  KartScenario sc = LoadScenario(scenario);
  sc.attack.seed = 11;
  RunContext ctx;
  ctx.lexicon = &testing::Lexicon();
  ctx.clinical = &testing::Clinical();
  World world;
  world.private_corpus = &p.filled;
  world.gold = &p.gold;
  world.shadow_corpus = &s.filled;
  world.shadow_gold = &s.gold;
  WorldProvider provider(world, sc, ctx);
  EXPECT_EQ(r.out, RunScenario(sc, provider, ctx).report.ToJsonText());
}

TEST(CliTest, NameInversionPipelineEndToEnd) {
  testing::TempDir dir;
  const std::string w = (dir / "w").string();
  ASSERT_EQ(Kart({"gen-corpus", "--seed", "5", "--patients", "20", "--fill-rate", "1", "--out-dir", w}).code, 0);
  CliRun r = Kart({"anonymize", "--in", w + "/filled.jsonl", "--op", "hipaa", "--out", w + "/public.jsonl",
                "--gold", w + "/gold.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out).at("residual_phi_hits"), 0);

  const std::string model = (dir / "m").string();
  ASSERT_EQ(Kart({"train-lm", "--corpus", w + "/filled.jsonl", "--seed", "1", "--out", model}).code, 0);
  ASSERT_EQ(Kart({"extract-mentions", "--corpus", w + "/filled.jsonl", "--gold", w + "/gold.jsonl", "--seed",
                  "3", "--out", w + "/mentions.jsonl"})
                .code,
            0);
  EXPECT_EQ(Kart({"extract-mentions", "--corpus", w + "/filled.jsonl", "--out", w + "/x.jsonl"}).code, 1);
  ASSERT_EQ(Kart({"attack", "invert-names", "--model", model, "--mentions", w + "/mentions.jsonl", "--top-k",
                  "10", "--out", w + "/rankings.jsonl"})
                .code,
            0);
  r = Kart({"eval", "--rankings", w + "/rankings.jsonl", "--mentions", w + "/mentions.jsonl", "--model", model,
            "--ks", "1,10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const AttackReport report = AttackReport::FromJson(Json::parse(r.out));

  const auto mentions = LoadMentions(w + "/mentions.jsonl");
  const auto rankings = LoadRankings(w + "/rankings.jsonl");
  ASSERT_EQ(mentions.size(), 20u);
  size_t top1 = 0;
  for (const CandidateRanking& c : rankings) top1 += c.gold_rank == 1;
  EXPECT_EQ(report.n_mentions, 20u);
  EXPECT_DOUBLE_EQ(report.topk_accuracy.at(1), top1 / 20.0);
  EXPECT_TRUE(report.mean_kl.has_value());
  EXPECT_TRUE(report.baseline.has_value());

  r = Kart({"eval", "--rankings", w + "/rankings.jsonl", "--format", "csv", "--out", w + "/r.csv"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(Slurp(w + "/r.csv").rfind("key,value\n", 0), 0u);
}

TEST(CliTest, ServeCheckPassesForALocalModel) {
  testing::TempDir dir;
  const std::string w = (dir / "w").string(), model = (dir / "m").string();
  ASSERT_EQ(Kart({"gen-corpus", "--seed", "9", "--patients", "10", "--out-dir", w}).code, 0);
  ASSERT_EQ(Kart({"train-lm", "--corpus", w + "/filled.jsonl", "--seed", "1", "--out", model}).code, 0);
  CliRun r = Kart({"scorer", "serve-check", "--model", model});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PASS in-process parity"), std::string::npos);

  r = Kart({"embed-dist", "--model-a", model, "--model-b", model, "--tokens", "mary"});
  EXPECT_EQ(r.code, 1);  // count models have no embeddings
}

}  // namespace
}  // namespace kart
