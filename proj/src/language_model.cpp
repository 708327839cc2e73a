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

#include "stylemetrics/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "stylemetrics/errors.hpp"
#include "stylemetrics/io.hpp"
#include "stylemetrics/log.hpp"

namespace stylemetrics {
namespace {

using nlohmann::json;

constexpr int kLmFormatVersion = 1;

bool is_reserved(const std::string& word) {
  return word == kBos || word == kEos || word == kUnk;
}

}  // namespace

NGramLM::NGramLM(int order, int min_count, std::vector<std::string> vocab,
                 std::vector<double> discounts,
                 std::vector<std::unordered_map<Key, std::uint64_t>> counts)
    : order_(order),
      min_count_(min_count),
      vocab_(std::move(vocab)),
      discounts_(std::move(discounts)),
      counts_(std::move(counts)) {
  if (order_ < 1) throw ValidationError("language model order must be at least 1");
  if (vocab_.size() < 3 || vocab_[kBosId] != kBos || vocab_[kEosId] != kEos ||
      vocab_[kUnkId] != kUnk) {
    throw ValidationError("language model vocabulary must start with <s>, </s>, <unk>");
  }
  if (discounts_.size() != static_cast<std::size_t>(order_) ||
      counts_.size() != static_cast<std::size_t>(order_)) {
    throw ValidationError("language model needs one discount and one count table per order");
  }
  for (double d : discounts_) {
    if (!(d >= 0.0 && d < 1.0)) throw ValidationError("language model discounts must lie in [0, 1)");
  }
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<WordId>(i)).second) {
      throw ValidationError("duplicate language model word '" + vocab_[i] + "'");
    }
  }
  contexts_.resize(counts_.size());
  for (std::size_t n = 0; n < counts_.size(); ++n) {
    for (const auto& [key, count] : counts_[n]) {
      if (key.size() != n + 1) throw ValidationError("language model n-gram has the wrong order");
      for (WordId w : key) {
        if (w >= vocab_.size()) throw ValidationError("language model n-gram has an unknown id");
      }
      if (count == 0) continue;
      auto& stats = contexts_[n][key.substr(0, n)];
      stats.total += count;
      stats.types += 1;
    }
  }
}

NGramLM::WordId NGramLM::id(const std::string& word) const {
  if (word == kBos || word == kEos) return kUnkId;
  auto it = index_.find(word);
  return it == index_.end() ? kUnkId : it->second;
}

NGramLM::Key NGramLM::history_for(std::span<const std::string> context) const {
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  Key history(width, kBosId);
  const std::size_t take = std::min(width, context.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto& word = context[context.size() - take + i];
    history[width - take + i] = word == kBos ? kBosId : id(word);
  }
  return history;
}

double NGramLM::prob(WordId word, const Key& history) const {
  double p = 1.0 / static_cast<double>(predictable_size());
  for (int n = 1; n <= order_; ++n) {
    const std::size_t ctx_len = static_cast<std::size_t>(n - 1);
    if (history.size() < ctx_len) break;
    Key key = history.substr(history.size() - ctx_len);
    const auto& table = contexts_[static_cast<std::size_t>(n - 1)];
    auto ctx = table.find(key);
    if (ctx == table.end() || ctx->second.total == 0) continue;
    key.push_back(word);
    const auto& counts = counts_[static_cast<std::size_t>(n - 1)];
    auto hit = counts.find(key);
    const double count = hit == counts.end() ? 0.0 : static_cast<double>(hit->second);
    const double d = discounts_[static_cast<std::size_t>(n - 1)];
    const double total = static_cast<double>(ctx->second.total);
    p = std::max(count - d, 0.0) / total + d * static_cast<double>(ctx->second.types) / total * p;
  }
  return p;
}

double NGramLM::prob(const std::string& word, std::span<const std::string> context) const {
  return prob(word == kEos ? kEosId : id(word), history_for(context));
}

std::vector<std::pair<std::string, double>> NGramLM::next_token_dist(
    std::span<const std::string> context) const {
  const Key history = history_for(context);
  std::vector<std::pair<std::string, double>> dist;
  dist.reserve(predictable_size());
  for (std::size_t w = 1; w < vocab_.size(); ++w) {
    dist.emplace_back(vocab_[w], prob(static_cast<WordId>(w), history));
  }
  return dist;
}

SentenceNll NGramLM::sentence_nll(const Sentence& s) const {
  Key history(static_cast<std::size_t>(order_ - 1), kBosId);
  SentenceNll out;
  auto step = [&](WordId w) {
    out.nll -= std::log(prob(w, history));
    ++out.tokens;
    if (!history.empty()) {
      history.erase(0, 1);
      history.push_back(w);
    }
  };
  for (const auto& tok : s.tokens) step(id(tok));
  step(kEosId);
  return out;
}

std::string NGramLM::to_json() const {
  json counts = json::array();
  for (const auto& table : counts_) {
    std::vector<std::pair<Key, std::uint64_t>> sorted(table.begin(), table.end());
    std::sort(sorted.begin(), sorted.end());
    json rows = json::array();
    for (const auto& [key, count] : sorted) {
      json row = json::array();
      for (WordId w : key) row.push_back(static_cast<std::uint32_t>(w));
      row.push_back(count);
      rows.push_back(std::move(row));
    }
    counts.push_back(std::move(rows));
  }
  json doc = {{"format", "stylemetrics.ngram_lm"},
              {"version", kLmFormatVersion},
              {"smoothing", "interpolated-kneser-ney"},
              {"order", order_},
              {"min_count", min_count_},
              {"vocab", vocab_},
              {"discounts", discounts_},
              {"counts", std::move(counts)}};
  return doc.dump() + "\n";
}

NGramLM NGramLM::from_json(const std::string& text, const std::string& source) {
  try {
    json doc = json::parse(text);
    if (doc.value("format", "") != "stylemetrics.ngram_lm") {
      throw ParseError(source, 0, "not an n-gram language model");
    }
    if (doc.at("version").get<int>() != kLmFormatVersion) {
      throw ParseError(source, 0, "unsupported language model version");
    }
    std::vector<std::unordered_map<Key, std::uint64_t>> counts;
    for (const auto& rows : doc.at("counts")) {
      auto& table = counts.emplace_back();
      table.reserve(rows.size());
      for (const auto& row : rows) {
        if (row.size() < 2) throw ParseError(source, 0, "malformed n-gram count row");
        Key key;
        for (std::size_t i = 0; i + 1 < row.size(); ++i) {
          key.push_back(static_cast<WordId>(row[i].get<std::uint32_t>()));
        }
        table.emplace(std::move(key), row.back().get<std::uint64_t>());
      }
    }
    return NGramLM(doc.at("order").get<int>(), doc.at("min_count").get<int>(),
                   doc.at("vocab").get<std::vector<std::string>>(),
                   doc.at("discounts").get<std::vector<double>>(), std::move(counts));
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("invalid language model: ") + e.what());
  }
}

namespace {

NGramLM train_impl(const std::vector<const Corpus*>& corpora, const LmConfig& cfg) {
  using Key = NGramLM::Key;
  using WordId = NGramLM::WordId;
  if (cfg.order < 1) throw ValidationError("language model order must be at least 1");
  if (cfg.min_count < 1) throw ValidationError("language model min_count must be at least 1");
  const std::size_t order = static_cast<std::size_t>(cfg.order);
  if (cfg.discounts && cfg.discounts->size() != order) {
    throw ValidationError("expected one discount per order");
  }

  std::map<std::string, std::uint64_t> word_counts;
  std::size_t sentences = 0;
  for (const Corpus* c : corpora) {
    for (const auto& s : c->sentences) {
      ++sentences;
      for (const auto& tok : s.tokens) ++word_counts[tok];
    }
  }
  if (sentences == 0) throw EmptyCorpusError("cannot train a language model on an empty corpus");

  std::vector<std::string> vocab = {kBos, kEos, kUnk};
  std::unordered_map<std::string, WordId> index;
  for (const auto& [word, count] : word_counts) {
    if (count >= static_cast<std::uint64_t>(cfg.min_count) && !is_reserved(word)) {
      index.emplace(word, static_cast<WordId>(vocab.size()));
      vocab.push_back(word);
    }
  }

  // Raw counts of n-grams ending at each predicted position.
  std::vector<std::unordered_map<Key, std::uint64_t>> raw(order);
  Key ids;
  for (const Corpus* c : corpora) {
    for (const auto& s : c->sentences) {
      ids.assign(order - 1, NGramLM::kBosId);
      for (const auto& tok : s.tokens) {
        auto it = index.find(tok);
        ids.push_back(it == index.end() ? NGramLM::kUnkId : it->second);
      }
      ids.push_back(NGramLM::kEosId);
      for (std::size_t i = order - 1; i < ids.size(); ++i) {
        for (std::size_t n = 1; n <= order; ++n) ++raw[n - 1][ids.substr(i + 1 - n, n)];
      }
    }
  }

  // Lower orders use continuation counts, except n-grams that start with <s>,
  // which cannot be extended to the left and keep their raw counts.
  std::vector<std::unordered_map<Key, std::uint64_t>> adjusted(order);
  adjusted[order - 1] = raw[order - 1];
  for (std::size_t n = order - 1; n >= 1; --n) {
    auto& table = adjusted[n - 1];
    for (const auto& [key, count] : raw[n - 1]) {
      if (key.front() == NGramLM::kBosId) table[key] = count;
    }
    for (const auto& [key, count] : raw[n]) {
      Key suffix = key.substr(1);
      if (suffix.front() != NGramLM::kBosId) ++table[suffix];
    }
  }

  std::vector<double> discounts;
  if (cfg.discounts) {
    discounts = *cfg.discounts;
  } else {
    for (std::size_t n = 1; n <= order; ++n) {
      std::uint64_t n1 = 0, n2 = 0;
      for (const auto& kv : adjusted[n - 1]) {
        if (kv.second == 1) ++n1;
        if (kv.second == 2) ++n2;
      }
      double d = 0.0;
      if (n1 + 2 * n2 == 0) {
        d = kMinDiscount;
        warn("order-" + std::to_string(n) +
             " count-of-counts are degenerate (n1 + 2*n2 = 0); using discount " +
             std::to_string(kMinDiscount));
      } else if (n2 == 0) {
        d = kMaxDiscount;
        warn("order-" + std::to_string(n) + " has no count-2 n-grams; discount clamped to " +
             std::to_string(kMaxDiscount));
      } else {
        d = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
      }
      discounts.push_back(d);
    }
  }

  return NGramLM(cfg.order, cfg.min_count, std::move(vocab), std::move(discounts),
                 std::move(adjusted));
}

}  // namespace

NGramLM train_lm(std::span<const Corpus> corpora, const LmConfig& cfg) {
  std::vector<const Corpus*> ptrs;
  for (const auto& c : corpora) ptrs.push_back(&c);
  return train_impl(ptrs, cfg);
}

NGramLM train_lm(const Corpus& x0, const Corpus& x1, const LmConfig& cfg) {
  return train_impl({&x0, &x1}, cfg);
}

void save_lm(const NGramLM& lm, const std::filesystem::path& path) {
  write_file_atomic(path, lm.to_json());
}

NGramLM load_lm(const std::filesystem::path& path) {
  return NGramLM::from_json(read_file(path), path.string());
}

PerplexityReport perplexity(const LanguageModel& lm, std::span<const Sentence> sentences) {
  if (sentences.empty()) throw ValidationError("perplexity needs at least one sentence");
  PerplexityReport report;
  report.per_sentence_pp.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto r = lm.sentence_nll(s);
    report.total_nll += r.nll;
    report.total_tokens += r.tokens;
    report.per_sentence_pp.push_back(std::exp(r.nll / static_cast<double>(r.tokens)));
  }
  report.pp = std::exp(report.total_nll / static_cast<double>(report.total_tokens));
  return report;
}

}  // namespace stylemetrics
