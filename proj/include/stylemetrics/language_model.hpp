// Copyright 2026 The stylemetrics Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stylemetrics/text.hpp"

namespace stylemetrics {

inline constexpr const char* kUnk = "<unk>";

// Discount used when an order has singletons but no count-2 n-grams, where
// n1 / (n1 + 2 n2) would reach 1.
inline constexpr double kMaxDiscount = 0.9;

// Discount used when an order has neither singletons nor count-2 n-grams. A
// zero discount there would give unseen continuations (often <unk>) zero
// probability.
inline constexpr double kMinDiscount = 0.1;

struct SentenceNll {
  double nll = 0.0;         // natural log
  std::size_t tokens = 0;   // |s| + 1 (includes </s>)
};

// A frozen language model that scores whole sentences.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual SentenceNll sentence_nll(const Sentence& s) const = 0;
};

struct LmConfig {
  int order = 3;
  int min_count = 2;
  // Per-order discounts (index 0 is unigrams). Estimated from count-of-counts
  // when unset.
  std::optional<std::vector<double>> discounts;
};

// Interpolated Kneser-Ney n-gram model with one discount per order.
class NGramLM final : public LanguageModel {
 public:
  using WordId = char32_t;
  using Key = std::u32string;  // n-gram of word ids

  static constexpr WordId kBosId = 0;
  static constexpr WordId kEosId = 1;
  static constexpr WordId kUnkId = 2;

  // `vocab` lists every word by id and must start with <s>, </s>, <unk>.
  // counts[n-1] holds the Kneser-Ney adjusted counts of order-n n-grams.
  NGramLM(int order, int min_count, std::vector<std::string> vocab, std::vector<double> discounts,
          std::vector<std::unordered_map<Key, std::uint64_t>> counts);

  SentenceNll sentence_nll(const Sentence& s) const override;

  int order() const { return order_; }
  int min_count() const { return min_count_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<double>& discounts() const { return discounts_; }
  // Words that can be predicted: everything except <s>.
  std::size_t predictable_size() const { return vocab_.size() - 1; }

  // Unknown words (and literal boundary markers) map to <unk>.
  WordId id(const std::string& word) const;

  // p(word | context). Only the last order-1 context words are used; shorter
  // contexts are left-padded with <s>. A literal <s> in the context is the
  // sentence-start marker.
  double prob(const std::string& word, std::span<const std::string> context) const;
  double prob(WordId word, const Key& history) const;

  // Distribution over every predictable word, in vocabulary order.
  std::vector<std::pair<std::string, double>> next_token_dist(
      std::span<const std::string> context) const;

  std::string to_json() const;
  static NGramLM from_json(const std::string& text, const std::string& source = "<lm>");

 private:
  struct ContextStats {
    std::uint64_t total = 0;  // sum of adjusted counts over continuations
    std::uint64_t types = 0;  // distinct continuations
  };

  Key history_for(std::span<const std::string> context) const;

  int order_;
  int min_count_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, WordId> index_;
  std::vector<double> discounts_;
  std::vector<std::unordered_map<Key, std::uint64_t>> counts_;
  std::vector<std::unordered_map<Key, ContextStats>> contexts_;
};

// Trains on the concatenation of the corpora. Words seen fewer than
// min_count times become <unk>; each sentence is padded with order-1 <s>
// and a single </s>.
NGramLM train_lm(std::span<const Corpus> corpora, const LmConfig& cfg);
NGramLM train_lm(const Corpus& x0, const Corpus& x1, const LmConfig& cfg);

void save_lm(const NGramLM& lm, const std::filesystem::path& path);
NGramLM load_lm(const std::filesystem::path& path);

struct PerplexityReport {
  double pp = 1.0;
  std::size_t total_tokens = 0;
  double total_nll = 0.0;
  std::vector<double> per_sentence_pp;
};

// Corpus perplexity exp(sum nll / sum tokens) plus per-sentence values.
PerplexityReport perplexity(const LanguageModel& lm, std::span<const Sentence> sentences);

}  // namespace stylemetrics
