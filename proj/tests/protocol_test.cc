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

#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "kart/count_scorer.h"
#include "kart/error.h"
#include "kart/external_scorer.h"
#include "kart/metrics.h"
#include "kart/protocol.h"
#include "kart/protocol_server.h"
#include "kart/tiny_mlm.h"
#include "test_support.h"

namespace kart {
namespace {

using Json = nlohmann::ordered_json;

Corpus SmallCorpus() {
  Corpus c;
  const char* texts[] = {"mary smith is a 54 year old female . asthma noted .",
                         "john brown is a 61 year old male . gout noted ."};
  int i = 0;
  for (const char* t : texts) {
    Document d;
    d.doc_id = "d" + std::to_string(i++);
    d.text = t;
    c.documents.push_back(d);
  }
  return c;
}

std::shared_ptr<const Vocabulary> Vocab() {
  static const Corpus c = SmallCorpus();
  static const auto v =
      std::make_shared<const Vocabulary>(BuildVocabulary({&c}, testing::Lexicon(), Tokenizer{}));
  return v;
}

const ScorerModel& CountModel() {
  static const auto m = TrainCountScorer(SmallCorpus(), Vocab(), Tokenizer{}, TrainingConfig{});
  return *m;
}

const ScorerModel& TinyModel() {
  static const auto m = [] {
    TrainingConfig cfg;
    cfg.model_kind = ModelKind::kTinyMlm;
    cfg.steps = 5;
    cfg.embedding_dim = 4;
    cfg.learning_rate = 0.01;
    return TrainTinyMlm(SmallCorpus(), Vocab(), Tokenizer{}, cfg);
  }();
  return *m;
}

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::kConfiguration;
}

TEST(ProtocolTest, RequestAndResponseJsonRoundTrip) {
  protocol::ScoreRequest req;
  req.tokens = {"[CLS]", "[MASK]", "smith", "[MASK]", "[SEP]"};
  req.mask_positions = {1, 3};
  req.candidates[1] = std::vector<std::string>{"mary", "john"};
  req.candidates[3] = FullVocab{};
  EXPECT_EQ(protocol::ScoreRequestFromJson(protocol::ToJson(req)), req);

  protocol::ScoreResponse resp;
  resp.model_id = "m";
  resp.log_probs[1] = {{"mary", -0.25}, {"john", -1.5}};
  EXPECT_EQ(protocol::ScoreResponseFromJson(protocol::ToJson(resp)), resp);
}

TEST(ProtocolTest, TokensParamSplitsOnCommas) {
  EXPECT_EQ(protocol::SplitTokensParam("a,b,,c"), (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_TRUE(protocol::SplitTokensParam("").empty());
}

TEST(ProtocolTest, ServerSpeaksTheWireProtocol) {
  ProtocolServer server(CountModel());
  httplib::Client client(server.endpoint());

  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("X-KART-Protocol"), "1");
  Json h = Json::parse(health->body);
  EXPECT_EQ(h.at("status"), "ok");
  EXPECT_EQ(h.at("protocol"), 1);
  EXPECT_EQ(h.at("model_id"), CountModel().provenance().model_id);
  EXPECT_EQ(h.at("capabilities").at("embeddings"), false);

  auto vocab = client.Get("/vocab");
  ASSERT_TRUE(vocab);
  EXPECT_EQ(Json::parse(vocab->body).at("tokens").get<std::vector<std::string>>(), Vocab()->tokens());

  Json body = {{"tokens", {"[CLS]", "[MASK]", "smith", "[SEP]"}},
               {"mask_positions", {1}},
               {"candidates", {{"1", "full_vocab"}}}};
  auto score = client.Post("/score", body.dump(), "application/json");
  ASSERT_TRUE(score);
  EXPECT_EQ(score->status, 200);
  EXPECT_EQ(score->get_header_value("X-KART-Protocol"), "1");
  protocol::ScoreResponse resp = protocol::ScoreResponseFromJson(Json::parse(score->body));
  double mass = 0;
  for (const auto& [token, lp] : resp.log_probs.at(1)) mass += std::exp(lp);
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(ProtocolTest, MalformedRequestsGetHttp400) {
  ProtocolServer server(CountModel());
  httplib::Client client(server.endpoint());
  Json bad_mask = {{"tokens", {"[CLS]", "smith", "[SEP]"}}, {"mask_positions", {7}}};
  auto r = client.Post("/score", bad_mask.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(r->get_header_value("X-KART-Protocol"), "1");
  EXPECT_TRUE(Json::parse(r->body).contains("error"));

  r = client.Post("/score", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);

  Json unknown = {{"tokens", {"[MASK]"}}, {"mask_positions", {0}}, {"candidates", {{"0", {"zebra"}}}}};
  r = client.Post("/score", unknown.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);

  r = client.Get("/embeddings?tokens=mary");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST(ProtocolTest, ExternalScorerMatchesTheLocalModel) {
  ProtocolServer server(CountModel());
  auto remote = ExternalScorer::Connect(server.endpoint());
  EXPECT_EQ(remote->kind(), ModelKind::kExternal);
  EXPECT_EQ(remote->vocabulary(), CountModel().vocabulary());
  EXPECT_EQ(remote->provenance().model_id, CountModel().provenance().model_id);
  EXPECT_EQ(remote->provenance().anonymizer, CountModel().provenance().anonymizer);

  const std::vector<std::string> tokens = {"[CLS]", "[MASK]", "[MASK]", "is", "a", "54", "[SEP]"};
  const std::map<size_t, CandidateSet> cands = {{2, std::vector<std::string>{"smith", "brown"}}};
  ScoreResult local = ScoreMasked(CountModel(), tokens, {1, 2}, cands);
  ScoreResult far = ScoreMasked(*remote, tokens, {1, 2}, cands);
  ASSERT_EQ(local.size(), far.size());
  for (const auto& [pos, scores] : local) {
    ASSERT_EQ(far.at(pos).tokens, scores.tokens);
    for (size_t i = 0; i < scores.log_probs.size(); ++i) {
      EXPECT_NEAR(far.at(pos).log_probs[i], scores.log_probs[i], 1e-12);
    }
  }
}

TEST(ProtocolTest, ExternalEmbeddingsMatchTheLocalModel) {
  ProtocolServer server(TinyModel());
  auto remote = ExternalScorer::Connect(server.endpoint());
  ASSERT_TRUE(remote->has_embeddings());
  EXPECT_EQ(remote->embedding_dim(), 4u);
  EXPECT_EQ(ExportEmbeddings(*remote, {"mary", "smith"}), ExportEmbeddings(TinyModel(), {"mary", "smith"}));
  EXPECT_DOUBLE_EQ(EmbeddingDistance(*remote, TinyModel(), {"mary", "smith"}), 0.0);

  httplib::Client client(server.endpoint());
  auto r = client.Get("/embeddings?tokens=mary,smith");
  ASSERT_TRUE(r);
  Json j = Json::parse(r->body);
  EXPECT_EQ(j.at("dim"), 4);
  EXPECT_EQ(j.at("embeddings").size(), 2u);
}

TEST(ProtocolTest, VersionMismatchIsAProtocolError) {
  httplib::Server fake;
  fake.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("X-KART-Protocol", "2");
    res.set_content(R"({"status":"ok","model_id":"x","protocol":2})", "application/json");
  });
  const int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(port);
  EXPECT_EQ(KindOf([&] { ExternalScorer::Connect(endpoint); }), ErrorKind::kProtocol);
  fake.stop();
  t.join();
}

TEST(ProtocolTest, MissingHeaderIsAProtocolError) {
  httplib::Server fake;
  fake.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok","model_id":"x","protocol":1})", "application/json");
  });
  const int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();
  EXPECT_EQ(KindOf([&] { ExternalScorer::Connect("http://127.0.0.1:" + std::to_string(port)); }),
            ErrorKind::kProtocol);
  fake.stop();
  t.join();
}

TEST(ProtocolTest, UnreachableEndpointIsARetryableTransportError) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  ExternalScorerOptions options;
  options.timeout_seconds = 1.0;
  options.retries = 1;
  try {
    ExternalScorer::Connect("http://127.0.0.1:" + std::to_string(port), options);
    ADD_FAILURE() << "connected to a closed port";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTransport);
    EXPECT_TRUE(e.retryable());
    EXPECT_EQ(ExitCodeFor(e.kind()), 2);
  }
}

}  // namespace
}  // namespace kart
