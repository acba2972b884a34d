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

#ifndef KART_ATTACK_H_
#define KART_ATTACK_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kart/corpus.h"
#include "kart/lexicon.h"
#include "kart/phi.h"
#include "kart/scorer.h"
#include "kart/tokenizer.h"

namespace kart {

// "(first) (last) is a (age) year old (sex-word)" at the start of a sentence.
// "year-old" is accepted as one token.
struct MentionPattern {
  std::vector<std::string> male_words = {"male", "man", "gentleman", "m"};
  std::vector<std::string> female_words = {"female", "woman", "lady", "f"};
  size_t window_sentences = 5;
};

struct FullNameMention {
  std::string mention_id;  // "<doc_id>:s<sentence index>"
  std::string doc_id;
  int patient_id = 0;
  // [CLS] window [SEP] with both name sites set to [MASK] and every other
  // placeholder removed.
  std::vector<std::string> tokens;
  size_t first_pos = 1;
  size_t last_pos = 2;
  std::string gold_first;
  std::string gold_last;
  int age = 0;
  Sex sex = Sex::kMale;

  bool operator==(const FullNameMention&) const = default;
};

// One mention per matching sentence, ordered by mention_id. A name site is a
// NAME placeholder, a token lying exactly on a name span, or (in documents
// without any name spans) an alphabetic word. Gold names come from `gold`
// when given, else from the text when the name sites are not placeholders.
std::vector<FullNameMention> ExtractFullNameMentions(const Corpus& corpus,
                                                     const Tokenizer& tokenizer,
                                                     const PhiTable* gold = nullptr,
                                                     const MentionPattern& pattern = {});

// Drops mentions whose gold name is outside U x V, then keeps one seeded
// uniform pick per patient.
std::vector<FullNameMention> SelectTargetedMentions(const std::vector<FullNameMention>& mentions,
                                                    const NameLexicon& lexicon, uint64_t seed);

void WriteMentions(const std::vector<FullNameMention>& mentions, std::ostream& out);
std::vector<FullNameMention> ReadMentions(std::istream& in);
void SaveMentions(const std::vector<FullNameMention>& mentions, const std::filesystem::path& path);
std::vector<FullNameMention> LoadMentions(const std::filesystem::path& path);

struct NamePosterior {
  std::string mention_id;
  MarginalDistribution first;  // over U in lexicon order
  MarginalDistribution last;   // over V in lexicon order
  // (sum_j P(u_j)) * (sum_k P(v_k)) under the full-vocabulary distributions.
  double unnormalized_mass = 0.0;
};

// Candidate token ids for every lexicon name, resolved once per model.
class NameCandidates {
 public:
  NameCandidates(const Vocabulary& vocab, const NameLexicon& lexicon);
  const NameLexicon& lexicon() const { return *lexicon_; }
  const std::vector<TokenId>& first_ids() const { return first_ids_; }
  const std::vector<TokenId>& last_ids() const { return last_ids_; }

 private:
  const NameLexicon* lexicon_;
  std::vector<TokenId> first_ids_;
  std::vector<TokenId> last_ids_;
};

NamePosterior ComputeNamePosteriors(const ScorerModel& model, const FullNameMention& mention,
                                    const NameLexicon& lexicon);
NamePosterior ComputeNamePosteriors(const ScorerModel& model, const FullNameMention& mention,
                                    const NameCandidates& candidates);
// Element-wise equal to calling ComputeNamePosteriors per mention.
std::vector<NamePosterior> ComputeNamePosteriorsBatch(const ScorerModel& model,
                                                      const std::vector<FullNameMention>& mentions,
                                                      const NameLexicon& lexicon,
                                                      bool parallel = false);

struct RankedName {
  std::string first;
  std::string last;
  double probability = 0.0;

  bool operator==(const RankedName&) const = default;
};

struct CandidateRanking {
  std::string mention_id;
  std::vector<RankedName> entries;  // top-K in ranking order
  size_t gold_rank = 0;             // 1-based position of the gold pair
  double unnormalized_mass = 0.0;

  bool operator==(const CandidateRanking&) const = default;
};

// Ranking order over the grid: higher joint probability first, then first
// name ascending, then last name ascending. gold_rank is the 1-based
// position of the gold pair in that total order.
CandidateRanking RankCandidatesTopK(const MarginalDistribution& first,
                                    const MarginalDistribution& last, size_t k,
                                    std::string_view gold_first, std::string_view gold_last);

size_t GoldRank(const MarginalDistribution& first, const MarginalDistribution& last,
                std::string_view gold_first, std::string_view gold_last);

void WriteRankings(const std::vector<CandidateRanking>& rankings, std::ostream& out);
std::vector<CandidateRanking> ReadRankings(std::istream& in);
void SaveRankings(const std::vector<CandidateRanking>& rankings, const std::filesystem::path& path);
std::vector<CandidateRanking> LoadRankings(const std::filesystem::path& path);

// Posteriors plus rankings for a list of targeted mentions.
struct InversionResult {
  std::vector<NamePosterior> posteriors;
  std::vector<CandidateRanking> rankings;
};

InversionResult InvertNames(const ScorerModel& model, const std::vector<FullNameMention>& mentions,
                            const NameLexicon& lexicon, size_t top_k, bool parallel = false);

// Case 1: pick the public document most likely to carry each target's name.
struct DeanonymizedTarget {
  int patient_id = 0;
  bool resolved = false;
  std::string doc_id;  // empty when unresolved
  size_t candidate_documents = 0;
  double score = 0.0;  // log P(first) + log P(last) at the chosen site
  std::vector<std::string> estimated_pmh;
};

struct DeanonymizationResult {
  PhiTable estimates;  // attacker-role rows with pmh filled in
  std::vector<DeanonymizedTarget> targets;
};

// Knowledge rows carry first/last names and optionally sex and age; every
// known attribute filters candidate mentions before scoring.
DeanonymizationResult DeanonymizeDocuments(const ScorerModel& model, const Corpus& public_corpus,
                                           const PhiTable& knowledge, const Tokenizer& tokenizer,
                                           const ClinicalLexicon& clinical,
                                           const MentionPattern& pattern = {},
                                           bool parallel = false);

// Case 2: rank candidate identifiers by P(identifier | condition prompt).
inline constexpr std::string_view kDefaultAssociationPrompt =
    "past medical history includes {condition} . contact phone [MASK] .";

struct AssociationHit {
  std::string identifier;
  double probability = 0.0;

  bool operator==(const AssociationHit&) const = default;
};

// Probabilities are normalized over `candidates`; hits with probability
// >= p0 are returned in descending order (identifier ascending on ties).
std::vector<AssociationHit> AssociationAttack(const ScorerModel& model, std::string_view condition,
                                              const std::vector<std::string>& candidates,
                                              double p0, const Tokenizer& tokenizer,
                                              std::string_view prompt = kDefaultAssociationPrompt);

// Vocabulary tokens shaped like identifiers of `category`. Supported:
// phone, fax, ssn, mrn, email, health_plan, account.
std::vector<std::string> IdentifierCandidates(const Vocabulary& vocab, HipaaCategory category);

// Gold identifiers of `category` for the patients whose PMH lists `condition`.
std::vector<std::string> GoldAssociations(const PhiTable& gold, std::string_view condition,
                                          HipaaCategory category);

struct CalibrationPoint {
  double p0 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t predicted = 0;
};

struct CalibrationResult {
  CalibrationPoint chosen;
  std::vector<CalibrationPoint> grid;
  std::string shadow_model_id;
};

struct ShadowSpec {
  std::string condition;
  HipaaCategory category = HipaaCategory::kPhone;
  std::vector<double> grid;
  std::string prompt = std::string(kDefaultAssociationPrompt);
};

// Trains a shadow model on `shadow_corpus`, runs the association attack over
// the p0 grid against `shadow_gold` and keeps the p0 with the best F1
// (smallest p0 on ties).
CalibrationResult ShadowCalibrate(const Corpus& shadow_corpus, const PhiTable& shadow_gold,
                                  const ShadowSpec& spec, const TrainingConfig& config,
                                  const NameLexicon& lexicon, const Tokenizer& tokenizer);

}  // namespace kart

#endif  // KART_ATTACK_H_
