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

#ifndef KART_TOKENIZER_H_
#define KART_TOKENIZER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kart {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";

using TokenId = int32_t;

// Dense token <-> id map. Ids 0..4 are always [PAD], [UNK], [CLS], [SEP],
// [MASK] in that order.
class Vocabulary {
 public:
  Vocabulary();
  // `tokens` must start with the five special tokens and contain no
  // duplicates.
  explicit Vocabulary(std::vector<std::string> tokens);

  size_t size() const { return tokens_.size(); }
  std::optional<TokenId> Find(std::string_view token) const;
  TokenId IdOrUnk(std::string_view token) const;
  const std::string& Token(TokenId id) const { return tokens_[static_cast<size_t>(id)]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kUnkId = 1;
  static constexpr TokenId kClsId = 2;
  static constexpr TokenId kSepId = 3;
  static constexpr TokenId kMaskId = 4;
  static bool IsSpecial(TokenId id) { return id <= kMaskId; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

  std::string ToText() const;
  static Vocabulary FromText(std::string_view text);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenPiece {
  std::string text;
  size_t begin = 0;
  size_t end = 0;
};

// Word-level tokenizer: whitespace splitting, lower-casing, and splitting of
// leading/trailing punctuation into separate tokens. Bracketed tokens such as
// "[PH-NAME]" or "[MASK]" pass through intact. Additional characters in
// `split_chars` break words apart (a subword-style backend can be emulated by
// supplying a closed vocabulary instead).
class Tokenizer {
 public:
  struct Options {
    std::string edge_punctuation = ".,;:!?()\"'";
    std::string split_chars;
    std::string sentence_terminators = ".?!";
  };

  Tokenizer() = default;
  explicit Tokenizer(Options options) : options_(std::move(options)) {}

  std::vector<TokenPiece> Tokenize(std::string_view text) const;
  std::vector<std::string> Words(std::string_view text) const;

  bool IsTerminator(std::string_view token) const;
  // Groups pieces into sentences; a sentence ends at a standalone terminator.
  std::vector<std::vector<TokenPiece>> SplitSentences(std::vector<TokenPiece> pieces) const;

  // When set, a name only counts as a single token if it is in this
  // vocabulary (models whose vocabulary is fixed upstream).
  void set_closed_vocabulary(std::shared_ptr<const Vocabulary> vocab) {
    closed_vocab_ = std::move(vocab);
  }
  const Vocabulary* closed_vocabulary() const { return closed_vocab_.get(); }
  const Options& options() const { return options_; }

 private:
  Options options_;
  std::shared_ptr<const Vocabulary> closed_vocab_;
};

// True iff `text` tokenizes into exactly one (in-vocabulary, when the
// tokenizer has a closed vocabulary) token.
bool IsSingleToken(std::string_view text, const Tokenizer& tokenizer);

std::string ToLowerAscii(std::string_view s);

}  // namespace kart

#endif  // KART_TOKENIZER_H_
