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

#include "kart/tokenizer.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <fmt/format.h>

#include "kart/error.h"

namespace kart {
namespace {

std::vector<std::string> SpecialTokens() {
  return {std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken),
          std::string(kSepToken), std::string(kMaskToken)};
}

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string ToLowerAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(SpecialTokens()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto specials = SpecialTokens();
  if (tokens_.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens_.begin())) {
    throw Error(ErrorKind::kConfiguration,
                "vocabulary must begin with [PAD] [UNK] [CLS] [SEP] [MASK]");
  }
  index_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorKind::kConfiguration, fmt::format("duplicate vocabulary token '{}'", tokens_[i]));
    }
  }
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::IdOrUnk(std::string_view token) const {
  return Find(token).value_or(kUnkId);
}

std::string Vocabulary::ToText() const {
  std::string out;
  for (const std::string& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::FromText(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

std::vector<TokenPiece> Tokenizer::Tokenize(std::string_view text) const {
  std::vector<TokenPiece> pieces;
  const std::string& edge = options_.edge_punctuation;
  auto is_edge = [&](char c) { return edge.find(c) != std::string::npos; };

  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    if (i >= text.size()) break;
    size_t j = i;
    while (j < text.size() && !IsSpace(text[j])) ++j;

    size_t b = i;
    size_t e = j;
    while (b < e && is_edge(text[b]) && text[b] != '[') {
      pieces.push_back({std::string(1, text[b]), b, b + 1});
      ++b;
    }
    std::vector<TokenPiece> trailing;
    while (e > b && is_edge(text[e - 1])) {
      trailing.push_back({std::string(1, text[e - 1]), e - 1, e});
      --e;
    }
    if (b < e) {
      std::string_view core = text.substr(b, e - b);
      if (core.front() == '[' && core.back() == ']') {
        pieces.push_back({std::string(core), b, e});
      } else if (options_.split_chars.empty()) {
        pieces.push_back({ToLowerAscii(core), b, e});
      } else {
        size_t start = b;
        for (size_t k = b; k < e; ++k) {
          if (options_.split_chars.find(text[k]) != std::string::npos) {
            if (k > start) pieces.push_back({ToLowerAscii(text.substr(start, k - start)), start, k});
            pieces.push_back({std::string(1, text[k]), k, k + 1});
            start = k + 1;
          }
        }
        if (e > start) pieces.push_back({ToLowerAscii(text.substr(start, e - start)), start, e});
      }
    }
    pieces.insert(pieces.end(), trailing.rbegin(), trailing.rend());
    i = j;
  }
  return pieces;
}

std::vector<std::string> Tokenizer::Words(std::string_view text) const {
  std::vector<std::string> out;
  for (TokenPiece& p : Tokenize(text)) out.push_back(std::move(p.text));
  return out;
}

bool Tokenizer::IsTerminator(std::string_view token) const {
  return token.size() == 1 && options_.sentence_terminators.find(token[0]) != std::string::npos;
}

std::vector<std::vector<TokenPiece>> Tokenizer::SplitSentences(std::vector<TokenPiece> pieces) const {
  std::vector<std::vector<TokenPiece>> sentences;
  std::vector<TokenPiece> current;
  for (TokenPiece& p : pieces) {
    const bool end = IsTerminator(p.text);
    current.push_back(std::move(p));
    if (end) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

bool IsSingleToken(std::string_view text, const Tokenizer& tokenizer) {
  auto pieces = tokenizer.Tokenize(text);
  if (pieces.size() != 1) return false;
  if (const Vocabulary* vocab = tokenizer.closed_vocabulary()) {
    return vocab->Find(pieces.front().text).has_value();
  }
  return true;
}

}  // namespace kart
