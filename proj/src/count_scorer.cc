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

#include "kart/count_scorer.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kart/error.h"
#include "kart/kernels.h"

namespace kart {
namespace {

// Transposes per-target sparse rows into rows keyed by context token.
CountRows Transpose(const std::vector<std::vector<std::pair<int32_t, int32_t>>>& by_target,
                    size_t vocab_size) {
  CountRows rows;
  rows.offsets.assign(vocab_size + 1, 0);
  for (const auto& row : by_target) {
    for (const auto& [c, n] : row) ++rows.offsets[static_cast<size_t>(c) + 1];
  }
  for (size_t i = 0; i < vocab_size; ++i) rows.offsets[i + 1] += rows.offsets[i];
  rows.targets.resize(static_cast<size_t>(rows.offsets.back()));
  rows.counts.resize(rows.targets.size());
  std::vector<int32_t> fill(rows.offsets.begin(), rows.offsets.end() - 1);
  for (size_t t = 0; t < by_target.size(); ++t) {
    for (const auto& [c, n] : by_target[t]) {
      const auto at = static_cast<size_t>(fill[static_cast<size_t>(c)]++);
      rows.targets[at] = static_cast<int32_t>(t);
      rows.counts[at] = n;
    }
  }
  return rows;
}

CountRows NeighbourRows(const std::vector<std::pair<TokenId, TokenId>>& pairs, size_t vocab_size) {
  std::vector<std::vector<std::pair<int32_t, int32_t>>> by_target(vocab_size);
  std::vector<std::pair<TokenId, TokenId>> sorted = pairs;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    by_target[static_cast<size_t>(sorted[i].first)].emplace_back(sorted[i].second,
                                                                 static_cast<int32_t>(j - i));
    i = j;
  }
  return Transpose(by_target, vocab_size);
}

void CheckRows(const CountRows& rows, size_t vocab_size, std::string_view name) {
  bool ok = rows.offsets.size() == vocab_size + 1 && rows.offsets.front() == 0 &&
            rows.targets.size() == rows.counts.size() &&
            static_cast<size_t>(rows.offsets.back()) == rows.targets.size() &&
            std::is_sorted(rows.offsets.begin(), rows.offsets.end());
  for (size_t i = 0; ok && i < rows.targets.size(); ++i) {
    ok = rows.targets[i] >= 0 && static_cast<size_t>(rows.targets[i]) < vocab_size &&
         rows.counts[i] > 0;
  }
  if (!ok) {
    throw Error(ErrorKind::kDataIntegrity, fmt::format("count table '{}' is malformed", name));
  }
}

}  // namespace

CountScorer::CountScorer(std::shared_ptr<const Vocabulary> vocab, CountTables tables,
                         ModelProvenance provenance)
    : vocab_(std::move(vocab)),
      tables_(std::move(tables)),
      provenance_(std::move(provenance)),
      k_(provenance_.config.smoothing_k) {
  const size_t w = vocab_->size();
  if (tables_.occurrences.size() != w) {
    throw Error(ErrorKind::kDataIntegrity,
                fmt::format("count model has {} occurrence counts for a vocabulary of {}",
                            tables_.occurrences.size(), w));
  }
  CheckRows(tables_.bag, w, "bag");
  CheckRows(tables_.left, w, "left");
  CheckRows(tables_.right, w, "right");

  const double kw = k_ * static_cast<double>(w);
  double total = 0.0;
  for (int32_t n : tables_.occurrences) total += n;
  std::vector<double> bag_total(w, 0.0);
  for (size_t i = 0; i < tables_.bag.targets.size(); ++i) {
    bag_total[static_cast<size_t>(tables_.bag.targets[i])] += tables_.bag.counts[i];
  }
  log_prior_.resize(w);
  log_bag_norm_.resize(w);
  log_neighbour_norm_.resize(w);
  const double log_total = std::log(total + kw);
  for (size_t t = 0; t < w; ++t) {
    log_prior_[t] = std::log(tables_.occurrences[t] + k_) - log_total;
    log_bag_norm_[t] = std::log(bag_total[t] + kw);
    log_neighbour_norm_[t] = std::log(tables_.occurrences[t] + kw);
  }
}

void CountScorer::AddRow(const CountRows& rows, TokenId key, double log_k,
                         std::vector<double>& score) const {
  const auto c = static_cast<size_t>(key);
  for (auto i = static_cast<size_t>(rows.offsets[c]); i < static_cast<size_t>(rows.offsets[c + 1]);
       ++i) {
    score[static_cast<size_t>(rows.targets[i])] += std::log(rows.counts[i] + k_) - log_k;
  }
}

std::vector<std::vector<double>> CountScorer::Score(
    std::span<const TokenId> ids, std::span<const size_t> mask_positions,
    std::span<const std::vector<TokenId>> candidates) const {
  const size_t w = vocab_->size();
  const double log_k = std::log(k_);
  auto is_masked = [&](size_t pos) {
    return std::find(mask_positions.begin(), mask_positions.end(), pos) != mask_positions.end();
  };

  std::vector<TokenId> bag;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (!is_masked(i) && !Vocabulary::IsSpecial(ids[i])) bag.push_back(ids[i]);
  }
  const double n_bag = static_cast<double>(bag.size());

  std::vector<std::vector<double>> out;
  for (size_t m = 0; m < mask_positions.size(); ++m) {
    const size_t pos = mask_positions[m];
    std::optional<TokenId> left, right;
    if (pos > 0 && !is_masked(pos - 1)) left = ids[pos - 1];
    if (pos + 1 < ids.size() && !is_masked(pos + 1)) right = ids[pos + 1];
    const double n_neigh = (left ? 1.0 : 0.0) + (right ? 1.0 : 0.0);

    std::vector<double> score(w);
    for (size_t t = 0; t < w; ++t) {
      score[t] = log_prior_[t] + n_bag * (log_k - log_bag_norm_[t]) +
                 n_neigh * (log_k - log_neighbour_norm_[t]);
    }
    for (TokenId c : bag) AddRow(tables_.bag, c, log_k, score);
    if (left) AddRow(tables_.left, *left, log_k, score);
    if (right) AddRow(tables_.right, *right, log_k, score);
    kernels::LogSoftmax(score, false);

    if (candidates[m].empty()) {
      out.push_back(std::move(score));
    } else {
      std::vector<double> picked;
      picked.reserve(candidates[m].size());
      for (TokenId t : candidates[m]) picked.push_back(score[static_cast<size_t>(t)]);
      out.push_back(std::move(picked));
    }
  }
  return out;
}

std::vector<ParamArray> CountScorer::ExportParams() const {
  std::vector<ParamArray> p;
  p.push_back({"occurrences", tables_.occurrences});
  for (const auto& [name, rows] : {std::pair{"bag", &tables_.bag}, std::pair{"left", &tables_.left},
                                   std::pair{"right", &tables_.right}}) {
    p.push_back({fmt::format("{}.offsets", name), rows->offsets});
    p.push_back({fmt::format("{}.targets", name), rows->targets});
    p.push_back({fmt::format("{}.counts", name), rows->counts});
  }
  return p;
}

CountTables CountScorer::TablesFromParams(const std::vector<ParamArray>& params,
                                          size_t vocab_size) {
  auto get = [&](std::string_view name) -> std::vector<int32_t> {
    for (const ParamArray& a : params) {
      if (a.name != name) continue;
      if (const auto* v = std::get_if<std::vector<int32_t>>(&a.data)) return *v;
      throw Error(ErrorKind::kDataIntegrity, fmt::format("array '{}' must be int32", name));
    }
    throw Error(ErrorKind::kDataIntegrity, fmt::format("count model lacks array '{}'", name));
  };
  CountTables t;
  t.occurrences = get("occurrences");
  for (auto [name, rows] : {std::pair{"bag", &t.bag}, std::pair{"left", &t.left},
                            std::pair{"right", &t.right}}) {
    rows->offsets = get(fmt::format("{}.offsets", name));
    rows->targets = get(fmt::format("{}.targets", name));
    rows->counts = get(fmt::format("{}.counts", name));
    CheckRows(*rows, vocab_size, name);
  }
  return t;
}

std::unique_ptr<CountScorer> TrainCountScorer(const Corpus& corpus,
                                              std::shared_ptr<const Vocabulary> vocab,
                                              const Tokenizer& tokenizer,
                                              const TrainingConfig& config) {
  config.Validate();
  if (config.model_kind != ModelKind::kCountNb) {
    throw Error(ErrorKind::kConfiguration, "TrainCountScorer needs model_kind = count_nb");
  }
  const size_t w = vocab->size();
  const auto segments = SegmentCorpus(corpus, tokenizer, *vocab, config.max_sequence_length);
  size_t n_tokens = 0;
  for (const auto& s : segments) n_tokens += s.size() - 2;
  if (n_tokens == 0) throw Error(ErrorKind::kTraining, "training corpus has no tokens");

  // Histogram of ordinary tokens per segment, and the segments holding each
  // occurrence of each target.
  std::vector<std::vector<std::pair<TokenId, int32_t>>> hist(segments.size());
  std::vector<std::vector<uint32_t>> occurrence_segments(w);
  std::vector<std::pair<TokenId, TokenId>> left_pairs, right_pairs;
  CountTables tables;
  tables.occurrences.assign(w, 0);
  for (size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    std::vector<TokenId> sorted;
    for (size_t i = 1; i + 1 < seg.size(); ++i) {
      const TokenId t = seg[i];
      if (Vocabulary::IsSpecial(t)) continue;
      sorted.push_back(t);
      ++tables.occurrences[static_cast<size_t>(t)];
      occurrence_segments[static_cast<size_t>(t)].push_back(static_cast<uint32_t>(s));
      left_pairs.emplace_back(t, seg[i - 1]);
      right_pairs.emplace_back(t, seg[i + 1]);
    }
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size();) {
      size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      hist[s].emplace_back(sorted[i], static_cast<int32_t>(j - i));
      i = j;
    }
  }

  // Integer counts make the per-target accumulation exact under any
  // schedule.
  std::vector<std::vector<std::pair<int32_t, int32_t>>> bag_by_target(w);
  const auto nw = static_cast<int64_t>(w);
#pragma omp parallel if (config.parallel)
  {
    std::vector<int32_t> scratch(w, 0);
    std::vector<int32_t> touched;
#pragma omp for schedule(dynamic, 64)
    for (int64_t ti = 0; ti < nw; ++ti) {
      const auto t = static_cast<TokenId>(ti);
      for (uint32_t s : occurrence_segments[static_cast<size_t>(ti)]) {
        for (const auto& [c, h] : hist[s]) {
          const int32_t n = h - (c == t ? 1 : 0);
          if (n == 0) continue;
          if (scratch[static_cast<size_t>(c)] == 0) touched.push_back(c);
          scratch[static_cast<size_t>(c)] += n;
        }
      }
      std::sort(touched.begin(), touched.end());
      auto& row = bag_by_target[static_cast<size_t>(ti)];
      row.reserve(touched.size());
      for (int32_t c : touched) {
        row.emplace_back(c, scratch[static_cast<size_t>(c)]);
        scratch[static_cast<size_t>(c)] = 0;
      }
      touched.clear();
    }
  }
  tables.bag = Transpose(bag_by_target, w);
  tables.left = NeighbourRows(left_pairs, w);
  tables.right = NeighbourRows(right_pairs, w);

  ModelProvenance prov;
  prov.corpus_hash = CorpusDigest(corpus);
  prov.anonymizer = corpus.provenance.anonymizer;
  prov.config = config;
  prov.trained = true;
  prov.training_mode = config.parallel ? "parallel" : "serial";
  prov.model_id = fmt::format("count_nb-{}", prov.corpus_hash.substr(0, 12));
  return std::make_unique<CountScorer>(std::move(vocab), std::move(tables), std::move(prov));
}

}  // namespace kart
