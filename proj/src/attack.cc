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

#include "kart/attack.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "kart/error.h"
#include "kart/io.h"
#include "kart/random.h"
#include "kart/train.h"

namespace kart {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool IsNamePlaceholder(std::string_view token) {
  return IsPlaceholderToken(token) && token.ends_with("-NAME]");
}

bool IsAlphabetic(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || c == '\'' || c == '-';
  }) && std::isalpha(static_cast<unsigned char>(token.front()));
}

std::optional<int> ParseAge(std::string_view token) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) return std::nullopt;
  return value;
}

std::optional<Sex> ParseSexWord(std::string_view word, const MentionPattern& pattern) {
  auto has = [&](const std::vector<std::string>& words) {
    return std::find(words.begin(), words.end(), word) != words.end();
  };
  if (has(pattern.male_words)) return Sex::kMale;
  if (has(pattern.female_words)) return Sex::kFemale;
  return std::nullopt;
}

struct PatternMatch {
  int age = 0;
  Sex sex = Sex::kMale;
};

std::optional<PatternMatch> MatchPattern(const std::vector<TokenPiece>& s,
                                         const MentionPattern& pattern) {
  if (s.size() < 7 || s[2].text != "is" || s[3].text != "a") return std::nullopt;
  auto age = ParseAge(s[4].text);
  if (!age) return std::nullopt;
  size_t sex_at = 0;
  if (s[5].text == "year-old") {
    sex_at = 6;
  } else if (s[5].text == "year" && s.size() >= 8 && s[6].text == "old") {
    sex_at = 7;
  } else {
    return std::nullopt;
  }
  auto sex = ParseSexWord(s[sex_at].text, pattern);
  if (!sex) return std::nullopt;
  return PatternMatch{*age, *sex};
}

// Whether the piece is a name site for `field` in `doc`.
bool IsNameSite(const TokenPiece& p, const Document& doc, PhiField field, bool doc_has_name_spans) {
  if (IsNamePlaceholder(p.text)) return true;
  for (const PhiSpan& span : doc.phi_spans) {
    if (span.start == p.begin && span.end == p.end) return span.field == field;
  }
  return !doc_has_name_spans && IsAlphabetic(p.text);
}

Json MentionToJson(const FullNameMention& m) {
  Json j;
  j["mention_id"] = m.mention_id;
  j["doc_id"] = m.doc_id;
  j["patient_id"] = m.patient_id;
  j["tokens"] = m.tokens;
  j["first_pos"] = m.first_pos;
  j["last_pos"] = m.last_pos;
  j["gold_first"] = m.gold_first;
  j["gold_last"] = m.gold_last;
  j["age"] = m.age;
  j["sex"] = std::string(SexName(m.sex));
  return j;
}

FullNameMention MentionFromJson(const Json& j) {
  FullNameMention m;
  m.mention_id = j.at("mention_id").get<std::string>();
  m.doc_id = j.at("doc_id").get<std::string>();
  m.patient_id = j.at("patient_id").get<int>();
  m.tokens = j.at("tokens").get<std::vector<std::string>>();
  m.first_pos = j.at("first_pos").get<size_t>();
  m.last_pos = j.at("last_pos").get<size_t>();
  m.gold_first = j.at("gold_first").get<std::string>();
  m.gold_last = j.at("gold_last").get<std::string>();
  m.age = j.at("age").get<int>();
  auto sex = ParseSex(j.at("sex").get<std::string>());
  if (!sex) throw Error(ErrorKind::kParse, fmt::format("mention {} has an unknown sex", m.mention_id));
  m.sex = *sex;
  if (m.first_pos >= m.tokens.size() || m.last_pos >= m.tokens.size() ||
      m.tokens[m.first_pos] != kMaskToken || m.tokens[m.last_pos] != kMaskToken) {
    throw Error(ErrorKind::kValidation,
                fmt::format("mention {} does not carry {} at its name positions", m.mention_id,
                            kMaskToken));
  }
  return m;
}

template <typename T, typename FromJson>
std::vector<T> ReadJsonLines(std::istream& in, FromJson from_json) {
  std::vector<T> out;
  ForEachLine(in, [&](std::string_view line, size_t number) {
    try {
      out.push_back(from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("line {}: {}", number, e.what()));
    }
  });
  return out;
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot open {}", path.string()));
  return in;
}

double LogSumExp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> Normalize(const std::vector<double>& log_probs, double lse) {
  std::vector<double> p(log_probs.size());
  for (size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_probs[i] - lse);
  return p;
}

// Indices sorted by probability descending, then name ascending.
std::vector<size_t> SortedOrder(const MarginalDistribution& d) {
  std::vector<size_t> order(d.probs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (d.probs[a] != d.probs[b]) return d.probs[a] > d.probs[b];
    return d.names[a] < d.names[b];
  });
  return order;
}

size_t IndexOf(const MarginalDistribution& d, std::string_view name, std::string_view which) {
  auto it = std::find(d.names.begin(), d.names.end(), name);
  if (it == d.names.end()) {
    throw Error(ErrorKind::kDataIntegrity,
                fmt::format("gold {} name '{}' is outside the candidate grid", which, name));
  }
  return static_cast<size_t>(it - d.names.begin());
}

void CheckMarginal(const MarginalDistribution& d, std::string_view which) {
  if (d.names.size() != d.probs.size() || d.names.empty()) {
    throw Error(ErrorKind::kConfiguration,
                fmt::format("{} distribution must be non-empty with one probability per name", which));
  }
}

std::vector<TokenId> PromptIds(std::string_view prompt, std::string_view condition,
                               const Tokenizer& tokenizer, const Vocabulary& vocab, size_t* mask_pos) {
  std::string text(prompt);
  const std::string slot = "{condition}";
  if (auto at = text.find(slot); at != std::string::npos) text.replace(at, slot.size(), condition);
  std::vector<TokenId> ids = {Vocabulary::kClsId};
  std::optional<size_t> mask;
  for (const TokenPiece& p : tokenizer.Tokenize(text)) {
    if (p.text == kMaskToken) {
      if (mask) throw Error(ErrorKind::kConfiguration, "association prompt has more than one [MASK]");
      mask = ids.size();
      ids.push_back(Vocabulary::kMaskId);
    } else if (!IsPlaceholderToken(p.text)) {
      ids.push_back(vocab.IdOrUnk(p.text));
    }
  }
  if (!mask) throw Error(ErrorKind::kConfiguration, "association prompt lacks a [MASK] slot");
  ids.push_back(Vocabulary::kSepId);
  *mask_pos = *mask;
  return ids;
}

const std::map<HipaaCategory, std::string>& IdentifierShapes() {
  static const auto* shapes = new std::map<HipaaCategory, std::string>{
      {HipaaCategory::kPhone, R"(\d{3}-\d{3}-\d{4})"},
      {HipaaCategory::kFax, R"(\+1-\d{3}-\d{3}-\d{4})"},
      {HipaaCategory::kSsn, R"(\d{3}-\d{2}-\d{4})"},
      {HipaaCategory::kMrn, R"(\d{8})"},
      {HipaaCategory::kEmail, R"([a-z0-9._-]+@[a-z0-9.-]+)"},
      {HipaaCategory::kHealthPlan, R"(hp\d{9})"},
      {HipaaCategory::kAccount, R"(acct-\d{8})"},
  };
  return *shapes;
}

}  // namespace

std::vector<FullNameMention> ExtractFullNameMentions(const Corpus& corpus, const Tokenizer& tokenizer,
                                                     const PhiTable* gold,
                                                     const MentionPattern& pattern) {
  std::vector<std::vector<FullNameMention>> per_doc(corpus.documents.size());
  const auto n_docs = static_cast<int64_t>(corpus.documents.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (int64_t d = 0; d < n_docs; ++d) {
    const Document& doc = corpus.documents[static_cast<size_t>(d)];
    const bool has_name_spans = std::any_of(doc.phi_spans.begin(), doc.phi_spans.end(),
                                            [](const PhiSpan& s) {
                                              return s.category() == HipaaCategory::kNames;
                                            });
    const auto sentences = tokenizer.SplitSentences(tokenizer.Tokenize(doc.text));
    for (size_t si = 0; si < sentences.size(); ++si) {
      const auto& s = sentences[si];
      auto match = MatchPattern(s, pattern);
      if (!match || !IsNameSite(s[0], doc, PhiField::kFirstName, has_name_spans) ||
          !IsNameSite(s[1], doc, PhiField::kLastName, has_name_spans)) {
        continue;
      }
      FullNameMention m;
      m.mention_id = fmt::format("{}:s{:03d}", doc.doc_id, si);
      m.doc_id = doc.doc_id;
      m.patient_id = doc.patient_id;
      m.age = match->age;
      m.sex = match->sex;
      m.tokens.emplace_back(kClsToken);
      const size_t end = std::min(sentences.size(), si + pattern.window_sentences);
      for (size_t w = si; w < end; ++w) {
        for (size_t t = 0; t < sentences[w].size(); ++t) {
          const std::string& text = sentences[w][t].text;
          if (w == si && t < 2) {
            m.tokens.emplace_back(kMaskToken);
          } else if (!IsPlaceholderToken(text)) {
            m.tokens.push_back(text);
          }
        }
      }
      m.tokens.emplace_back(kSepToken);
      if (gold != nullptr) {
        if (const PhiRecord* r = gold->Find(doc.patient_id)) {
          m.gold_first = r->first_name;
          m.gold_last = r->last_name;
        }
      } else if (!IsPlaceholderToken(s[0].text) && !IsPlaceholderToken(s[1].text)) {
        m.gold_first = s[0].text;
        m.gold_last = s[1].text;
      }
      per_doc[static_cast<size_t>(d)].push_back(std::move(m));
    }
  }
  std::vector<FullNameMention> out;
  for (auto& v : per_doc) {
    for (auto& m : v) out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(),
            [](const FullNameMention& a, const FullNameMention& b) { return a.mention_id < b.mention_id; });
  return out;
}

std::vector<FullNameMention> SelectTargetedMentions(const std::vector<FullNameMention>& mentions,
                                                    const NameLexicon& lexicon, uint64_t seed) {
  std::map<int, std::vector<const FullNameMention*>> by_patient;
  for (const FullNameMention& m : mentions) {
    if (lexicon.Contains(m.gold_first, m.gold_last)) by_patient[m.patient_id].push_back(&m);
  }
  std::vector<FullNameMention> out;
  for (auto& [patient, list] : by_patient) {
    std::sort(list.begin(), list.end(), [](const FullNameMention* a, const FullNameMention* b) {
      return a->mention_id < b->mention_id;
    });
    Rng rng(DeriveSeed(seed, {static_cast<uint64_t>(patient)}));
    out.push_back(*list[rng.Below(list.size())]);
  }
  std::sort(out.begin(), out.end(),
            [](const FullNameMention& a, const FullNameMention& b) { return a.mention_id < b.mention_id; });
  return out;
}

void WriteMentions(const std::vector<FullNameMention>& mentions, std::ostream& out) {
  for (const FullNameMention& m : mentions) out << MentionToJson(m).dump() << '\n';
}

std::vector<FullNameMention> ReadMentions(std::istream& in) {
  return ReadJsonLines<FullNameMention>(in, MentionFromJson);
}

void SaveMentions(const std::vector<FullNameMention>& mentions, const std::filesystem::path& path) {
  WriteFileAtomic(path, [&](std::ostream& out) { WriteMentions(mentions, out); });
}

std::vector<FullNameMention> LoadMentions(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  return ReadMentions(in);
}

NameCandidates::NameCandidates(const Vocabulary& vocab, const NameLexicon& lexicon)
    : lexicon_(&lexicon) {
  auto resolve = [&](const std::vector<WeightedName>& names, std::vector<TokenId>& ids) {
    for (const WeightedName& n : names) {
      auto id = vocab.Find(n.name);
      if (!id) {
        throw Error(ErrorKind::kUnknownToken,
                    fmt::format("lexicon name '{}' is not in the model vocabulary", n.name));
      }
      ids.push_back(*id);
    }
  };
  resolve(lexicon.first_names(), first_ids_);
  resolve(lexicon.last_names(), last_ids_);
}

NamePosterior ComputeNamePosteriors(const ScorerModel& model, const FullNameMention& mention,
                                    const NameLexicon& lexicon) {
  return ComputeNamePosteriors(model, mention, NameCandidates(model.vocabulary(), lexicon));
}

NamePosterior ComputeNamePosteriors(const ScorerModel& model, const FullNameMention& mention,
                                    const NameCandidates& candidates) {
  const Vocabulary& vocab = model.vocabulary();
  std::vector<TokenId> ids;
  ids.reserve(mention.tokens.size());
  for (const std::string& t : mention.tokens) ids.push_back(vocab.IdOrUnk(t));
  const std::vector<size_t> positions = {mention.first_pos, mention.last_pos};
  for (size_t pos : positions) {
    if (pos >= ids.size() || ids[pos] != Vocabulary::kMaskId) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("mention {} has no {} at position {}", mention.mention_id, kMaskToken, pos));
    }
  }
  const std::vector<std::vector<TokenId>> cands = {candidates.first_ids(), candidates.last_ids()};
  const auto rows = model.Score(ids, positions, cands);

  NamePosterior post;
  post.mention_id = mention.mention_id;
  const double lse_first = LogSumExp(rows[0]);
  const double lse_last = LogSumExp(rows[1]);
  if (!std::isfinite(lse_first) || !std::isfinite(lse_last)) {
    throw Error(ErrorKind::kDegenerate,
                fmt::format("mention {}: candidate names carry no probability mass", mention.mention_id));
  }
  post.first.names = candidates.lexicon().FirstNameStrings();
  post.last.names = candidates.lexicon().LastNameStrings();
  post.first.probs = Normalize(rows[0], lse_first);
  post.last.probs = Normalize(rows[1], lse_last);
  post.unnormalized_mass = std::exp(lse_first + lse_last);
  return post;
}

std::vector<NamePosterior> ComputeNamePosteriorsBatch(const ScorerModel& model,
                                                      const std::vector<FullNameMention>& mentions,
                                                      const NameLexicon& lexicon, bool parallel) {
  const NameCandidates candidates(model.vocabulary(), lexicon);
  std::vector<NamePosterior> out(mentions.size());
  std::vector<std::exception_ptr> errors(mentions.size());
  const auto n = static_cast<int64_t>(mentions.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<size_t>(i)] = ComputeNamePosteriors(model, mentions[static_cast<size_t>(i)], candidates);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

CandidateRanking RankCandidatesTopK(const MarginalDistribution& first,
                                    const MarginalDistribution& last, size_t k,
                                    std::string_view gold_first, std::string_view gold_last) {
  CheckMarginal(first, "first-name");
  CheckMarginal(last, "last-name");
  if (k == 0) throw Error(ErrorKind::kConfiguration, "K must be at least 1");
  const std::vector<size_t> fo = SortedOrder(first);
  const std::vector<size_t> lo = SortedOrder(last);
  auto product = [&](size_t i, size_t j) { return first.probs[fo[i]] * last.probs[lo[j]]; };

  // Best-first walk: each cell (i, j) has one parent, (i-1, j) or (0, j-1),
  // whose product is never smaller, so cells leave the frontier in
  // non-increasing product order. Cells with equal products are gathered and
  // ordered by name before they are emitted.
  using Cell = std::pair<size_t, size_t>;
  auto less = [&](const Cell& a, const Cell& b) { return product(a.first, a.second) < product(b.first, b.second); };
  std::priority_queue<Cell, std::vector<Cell>, decltype(less)> frontier(less);
  frontier.push({0, 0});
  auto pop = [&]() {
    const Cell c = frontier.top();
    frontier.pop();
    if (c.first + 1 < fo.size()) frontier.push({c.first + 1, c.second});
    if (c.first == 0 && c.second + 1 < lo.size()) frontier.push({0, c.second + 1});
    return c;
  };

  const size_t want = std::min(k, first.probs.size() * last.probs.size());
  CandidateRanking ranking;
  ranking.entries.reserve(want);
  std::vector<Cell> group;
  while (ranking.entries.size() < want) {
    group.assign(1, pop());
    const double p = product(group[0].first, group[0].second);
    while (!frontier.empty() && product(frontier.top().first, frontier.top().second) == p) {
      group.push_back(pop());
    }
    std::sort(group.begin(), group.end(), [&](const Cell& a, const Cell& b) {
      const std::string& fa = first.names[fo[a.first]];
      const std::string& fb = first.names[fo[b.first]];
      if (fa != fb) return fa < fb;
      return last.names[lo[a.second]] < last.names[lo[b.second]];
    });
    for (const Cell& c : group) {
      if (ranking.entries.size() == want) break;
      ranking.entries.push_back({first.names[fo[c.first]], last.names[lo[c.second]], p});
    }
  }
  ranking.gold_rank = GoldRank(first, last, gold_first, gold_last);
  return ranking;
}

size_t GoldRank(const MarginalDistribution& first, const MarginalDistribution& last,
                std::string_view gold_first, std::string_view gold_last) {
  CheckMarginal(first, "first-name");
  CheckMarginal(last, "last-name");
  const size_t gf = IndexOf(first, gold_first, "first");
  const size_t gl = IndexOf(last, gold_last, "last");
  const double g = first.probs[gf] * last.probs[gl];
  const std::vector<size_t> lo = SortedOrder(last);

  size_t ahead = 0;
  for (size_t i = 0; i < first.probs.size(); ++i) {
    const double p = first.probs[i];
    // Products along `lo` are non-increasing; find the block equal to g.
    auto above = std::partition_point(lo.begin(), lo.end(),
                                      [&](size_t j) { return p * last.probs[j] > g; });
    ahead += static_cast<size_t>(above - lo.begin());
    const int first_cmp = first.names[i].compare(gold_first);
    for (auto it = above; it != lo.end() && p * last.probs[*it] == g; ++it) {
      if (first_cmp < 0 || (first_cmp == 0 && last.names[*it] < gold_last)) ++ahead;
    }
  }
  return ahead + 1;
}

namespace {

Json RankingToJson(const CandidateRanking& r) {
  Json j;
  j["mention_id"] = r.mention_id;
  j["gold_rank"] = r.gold_rank;
  j["unnormalized_mass"] = r.unnormalized_mass;
  Json entries = Json::array();
  for (const RankedName& e : r.entries) entries.push_back(Json::array({e.first, e.last, e.probability}));
  j["entries"] = std::move(entries);
  return j;
}

CandidateRanking RankingFromJson(const Json& j) {
  CandidateRanking r;
  r.mention_id = j.at("mention_id").get<std::string>();
  r.gold_rank = j.at("gold_rank").get<size_t>();
  r.unnormalized_mass = j.at("unnormalized_mass").get<double>();
  for (const Json& e : j.at("entries")) {
    r.entries.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>(), e.at(2).get<double>()});
  }
  if (r.gold_rank == 0) {
    throw Error(ErrorKind::kValidation, fmt::format("ranking {} has gold_rank 0", r.mention_id));
  }
  return r;
}

}  // namespace

void WriteRankings(const std::vector<CandidateRanking>& rankings, std::ostream& out) {
  for (const CandidateRanking& r : rankings) out << RankingToJson(r).dump() << '\n';
}

std::vector<CandidateRanking> ReadRankings(std::istream& in) {
  return ReadJsonLines<CandidateRanking>(in, RankingFromJson);
}

void SaveRankings(const std::vector<CandidateRanking>& rankings, const std::filesystem::path& path) {
  WriteFileAtomic(path, [&](std::ostream& out) { WriteRankings(rankings, out); });
}

std::vector<CandidateRanking> LoadRankings(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  return ReadRankings(in);
}

InversionResult InvertNames(const ScorerModel& model, const std::vector<FullNameMention>& mentions,
                            const NameLexicon& lexicon, size_t top_k, bool parallel) {
  InversionResult result;
  result.posteriors = ComputeNamePosteriorsBatch(model, mentions, lexicon, parallel);
  result.rankings.resize(mentions.size());
  const auto n = static_cast<int64_t>(mentions.size());
  std::vector<std::exception_ptr> errors(mentions.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<size_t>(i);
    try {
      const NamePosterior& p = result.posteriors[u];
      CandidateRanking r = RankCandidatesTopK(p.first, p.last, top_k, mentions[u].gold_first,
                                              mentions[u].gold_last);
      r.mention_id = mentions[u].mention_id;
      r.unnormalized_mass = p.unnormalized_mass;
      result.rankings[u] = std::move(r);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

DeanonymizationResult DeanonymizeDocuments(const ScorerModel& model, const Corpus& public_corpus,
                                           const PhiTable& knowledge, const Tokenizer& tokenizer,
                                           const ClinicalLexicon& clinical,
                                           const MentionPattern& pattern, bool parallel) {
  const Vocabulary& vocab = model.vocabulary();
  const std::vector<FullNameMention> mentions =
      ExtractFullNameMentions(public_corpus, tokenizer, nullptr, pattern);

  // One query per public mention covers every target's name at once.
  std::vector<std::string> firsts, lasts;
  for (const PhiRecord& r : knowledge.rows) {
    firsts.push_back(r.first_name);
    lasts.push_back(r.last_name);
  }
  auto unique = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique(firsts);
  unique(lasts);
  auto ids_for = [&](const std::vector<std::string>& names) {
    std::vector<TokenId> ids;
    for (const std::string& n : names) {
      auto id = vocab.Find(n);
      if (!id) {
        throw Error(ErrorKind::kUnknownToken,
                    fmt::format("target name '{}' is not in the model vocabulary", n));
      }
      ids.push_back(*id);
    }
    return ids;
  };
  const std::vector<std::vector<TokenId>> cands = {ids_for(firsts), ids_for(lasts)};

  std::vector<std::vector<std::vector<double>>> scores(mentions.size());
  const auto n = static_cast<int64_t>(mentions.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int64_t i = 0; i < n; ++i) {
    const FullNameMention& m = mentions[static_cast<size_t>(i)];
    std::vector<TokenId> ids;
    for (const std::string& t : m.tokens) ids.push_back(vocab.IdOrUnk(t));
    const std::vector<size_t> positions = {m.first_pos, m.last_pos};
    scores[static_cast<size_t>(i)] = model.Score(ids, positions, cands);
  }

  std::map<std::string, const Document*> docs;
  for (const Document& d : public_corpus.documents) docs[d.doc_id] = &d;

  DeanonymizationResult result;
  result.estimates.role = TableRole::kAttackerEstimate;
  for (const PhiRecord& target : knowledge.rows) {
    const size_t fi = static_cast<size_t>(
        std::lower_bound(firsts.begin(), firsts.end(), target.first_name) - firsts.begin());
    const size_t li = static_cast<size_t>(
        std::lower_bound(lasts.begin(), lasts.end(), target.last_name) - lasts.begin());
    DeanonymizedTarget t;
    t.patient_id = target.patient_id;
    double best = kNegInf;
    const FullNameMention* chosen = nullptr;
    for (size_t i = 0; i < mentions.size(); ++i) {
      const FullNameMention& m = mentions[i];
      if (target.sex && *target.sex != m.sex) continue;
      if (target.age && *target.age != m.age) continue;
      ++t.candidate_documents;
      const double s = scores[i][0][fi] + scores[i][1][li];
      if (chosen == nullptr || s > best) {
        best = s;
        chosen = &m;
      }
    }
    PhiRecord estimate = target;
    estimate.pmh.clear();
    if (chosen != nullptr) {
      t.resolved = true;
      t.doc_id = chosen->doc_id;
      t.score = best;
      t.estimated_pmh = FindConditions(docs.at(chosen->doc_id)->text, clinical);
      estimate.pmh = t.estimated_pmh;
    }
    result.estimates.rows.push_back(std::move(estimate));
    result.targets.push_back(std::move(t));
  }
  return result;
}

std::vector<AssociationHit> AssociationAttack(const ScorerModel& model, std::string_view condition,
                                              const std::vector<std::string>& candidates, double p0,
                                              const Tokenizer& tokenizer, std::string_view prompt) {
  if (candidates.empty()) throw Error(ErrorKind::kConfiguration, "association attack needs candidates");
  if (std::isnan(p0)) throw Error(ErrorKind::kConfiguration, "p0 must be a number");
  const Vocabulary& vocab = model.vocabulary();
  size_t mask_pos = 0;
  const std::vector<TokenId> ids = PromptIds(prompt, condition, tokenizer, vocab, &mask_pos);
  std::vector<TokenId> cand_ids;
  for (const std::string& c : candidates) {
    auto id = vocab.Find(c);
    if (!id) {
      throw Error(ErrorKind::kUnknownToken,
                  fmt::format("candidate '{}' is not a single vocabulary token", c));
    }
    cand_ids.push_back(*id);
  }
  const std::vector<size_t> positions = {mask_pos};
  const std::vector<std::vector<TokenId>> cands = {cand_ids};
  const std::vector<double> lp = model.Score(ids, positions, cands)[0];
  const double lse = LogSumExp(lp);
  if (!std::isfinite(lse)) {
    throw Error(ErrorKind::kDegenerate, "association candidates carry no probability mass");
  }
  std::vector<AssociationHit> hits;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double p = std::exp(lp[i] - lse);
    if (p >= p0) hits.push_back({candidates[i], p});
  }
  std::sort(hits.begin(), hits.end(), [](const AssociationHit& a, const AssociationHit& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.identifier < b.identifier;
  });
  return hits;
}

std::vector<std::string> IdentifierCandidates(const Vocabulary& vocab, HipaaCategory category) {
  auto it = IdentifierShapes().find(category);
  if (it == IdentifierShapes().end()) {
    throw Error(ErrorKind::kUnsupported,
                fmt::format("no identifier shape for category '{}'", HipaaCategoryName(category)));
  }
  const std::regex shape(it->second);
  std::vector<std::string> out;
  for (const std::string& t : vocab.tokens()) {
    if (std::regex_match(t, shape)) out.push_back(t);
  }
  return out;
}

std::vector<std::string> GoldAssociations(const PhiTable& gold, std::string_view condition,
                                          HipaaCategory category) {
  std::set<std::string> out;
  for (const PhiRecord& r : gold.rows) {
    if (std::find(r.pmh.begin(), r.pmh.end(), condition) == r.pmh.end()) continue;
    for (PhiField f : kAllPhiFields) {
      if (CategoryOf(f) != category) continue;
      for (std::string& v : r.Values(f)) out.insert(ToLowerAscii(v));
    }
  }
  return {out.begin(), out.end()};
}

CalibrationResult ShadowCalibrate(const Corpus& shadow_corpus, const PhiTable& shadow_gold,
                                  const ShadowSpec& spec, const TrainingConfig& config,
                                  const NameLexicon& lexicon, const Tokenizer& tokenizer) {
  if (spec.grid.empty()) throw Error(ErrorKind::kConfiguration, "shadow calibration grid is empty");
  auto vocab = std::make_shared<const Vocabulary>(BuildVocabulary({&shadow_corpus}, lexicon, tokenizer));
  const std::unique_ptr<ScorerModel> shadow = TrainModel(shadow_corpus, vocab, tokenizer, config);
  const std::vector<std::string> candidates = IdentifierCandidates(*vocab, spec.category);
  const std::vector<AssociationHit> scored =
      AssociationAttack(*shadow, spec.condition, candidates, kNegInf, tokenizer, spec.prompt);
  const std::vector<std::string> gold_list = GoldAssociations(shadow_gold, spec.condition, spec.category);
  const std::set<std::string> gold(gold_list.begin(), gold_list.end());

  CalibrationResult result;
  result.shadow_model_id = shadow->provenance().model_id;
  for (double p0 : spec.grid) {
    CalibrationPoint pt;
    pt.p0 = p0;
    size_t tp = 0;
    for (const AssociationHit& h : scored) {
      if (h.probability < p0) continue;
      ++pt.predicted;
      tp += gold.contains(h.identifier);
    }
    pt.precision = pt.predicted == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(pt.predicted);
    pt.recall = gold.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(gold.size());
    pt.f1 = pt.precision + pt.recall > 0.0
                ? 2.0 * pt.precision * pt.recall / (pt.precision + pt.recall)
                : 0.0;
    result.grid.push_back(pt);
  }
  result.chosen = result.grid.front();
  for (const CalibrationPoint& pt : result.grid) {
    if (pt.f1 > result.chosen.f1 || (pt.f1 == result.chosen.f1 && pt.p0 < result.chosen.p0)) {
      result.chosen = pt;
    }
  }
  return result;
}

}  // namespace kart
