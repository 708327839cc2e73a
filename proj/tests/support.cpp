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

#include "support.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "oracles.hpp"
#include "stylemetrics/errors.hpp"

namespace stylemetrics::testing {

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("stylemetrics-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

Sentence sent(const std::string& text) { return tokenize(text); }

Corpus corpus_of(const std::vector<std::string>& lines, int id, const std::string& name) {
  Corpus c{{id, name}, {}, "<memory>"};
  for (const auto& l : lines) c.sentences.push_back(tokenize(l));
  return c;
}

const std::vector<std::string>& marker_words(int style) {
  static const std::vector<std::string> negative = {"awful", "bad", "rude", "bland", "dirty"};
  static const std::vector<std::string> positive = {"great", "good", "kind", "tasty", "clean"};
  return style == 0 ? negative : positive;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the",   "food",  "was",   "and",    "service", "place", "staff", "it",
      "very",  "our",   "table", "waiter", "pizza",   "we",    "ordered", "menu",
      "price", "night", "a",     "of",     "with",    "is",    "this",  "they"};
  return words;
}

Sentence marker_sentence(int style, const MarkerRecipe& recipe, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> filler_len(recipe.min_filler, recipe.max_filler);
  std::uniform_int_distribution<std::size_t> pick_filler(0, filler_words().size() - 1);
  std::uniform_int_distribution<std::size_t> pick_marker(0, marker_words(0).size() - 1);
  std::bernoulli_distribution own(recipe.p_own);
  Sentence s;
  const int fillers = filler_len(rng);
  const int total = fillers + recipe.markers;
  std::vector<bool> is_marker(static_cast<std::size_t>(total), false);
  for (int m = 0; m < recipe.markers; ++m) is_marker[static_cast<std::size_t>(m)] = true;
  std::shuffle(is_marker.begin(), is_marker.end(), rng);
  for (bool marker : is_marker) {
    if (marker) {
      const int cls = own(rng) ? style : 1 - style;
      s.tokens.push_back(marker_words(cls)[pick_marker(rng)]);
    } else {
      s.tokens.push_back(filler_words()[pick_filler(rng)]);
    }
  }
  return s;
}

std::pair<Corpus, Corpus> marker_corpora(std::size_t per_class, const MarkerRecipe& recipe,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Corpus x0{{0, "negative"}, {}, "<synthetic>"};
  Corpus x1{{1, "positive"}, {}, "<synthetic>"};
  for (std::size_t i = 0; i < per_class; ++i) {
    x0.sentences.push_back(marker_sentence(0, recipe, rng));
    x1.sentences.push_back(marker_sentence(1, recipe, rng));
  }
  return {std::move(x0), std::move(x1)};
}

double marker_bayes_rate(const MarkerRecipe& recipe) {
  const int k = recipe.markers;
  double rate = 0.0;
  for (int own = 0; own <= k; ++own) {
    const double p = std::tgamma(k + 1.0) / (std::tgamma(own + 1.0) * std::tgamma(k - own + 1.0)) *
                     std::pow(recipe.p_own, own) * std::pow(1.0 - recipe.p_own, k - own);
    if (2 * own > k) rate += p;
    if (2 * own == k) rate += 0.5 * p;
  }
  return rate;
}

Sentence flip_markers(const Sentence& s) {
  static const auto table = [] {
    std::unordered_map<std::string, std::string> t;
    for (std::size_t i = 0; i < marker_words(0).size(); ++i) {
      t[marker_words(0)[i]] = marker_words(1)[i];
      t[marker_words(1)[i]] = marker_words(0)[i];
    }
    return t;
  }();
  Sentence out = s;
  for (auto& tok : out.tokens) {
    auto it = table.find(tok);
    if (it != table.end()) tok = it->second;
  }
  return out;
}

TransferSet marker_transfer_set(const Corpus& x0, const Corpus& x1, std::size_t n, bool flip) {
  TransferSet ts;
  for (std::size_t i = 0; i < n; ++i) {
    const Corpus& src = (i % 2 == 0) ? x0 : x1;
    const Corpus& dst = (i % 2 == 0) ? x1 : x0;
    const Sentence& original = src.sentences[(i / 2) % src.sentences.size()];
    ts.records.push_back({"r" + std::to_string(i), original, flip ? flip_markers(original) : original,
                          src.style, dst.style});
  }
  return ts;
}

EmbeddingTable random_embeddings(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingTable emb(dim);
  auto add = [&](const std::string& w) {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng);
    emb.insert(w, std::move(v));
  };
  for (int style = 0; style < 2; ++style) {
    for (const auto& w : marker_words(style)) add(w);
  }
  for (const auto& w : filler_words()) add(w);
  return emb;
}

std::string embeddings_text(const EmbeddingTable& emb, const std::vector<std::string>& words) {
  std::string out;
  char buf[64];
  for (const auto& w : words) {
    const auto* v = emb.find(w);
    if (v == nullptr) continue;
    out += w;
    for (double x : *v) {
      std::snprintf(buf, sizeof(buf), " %.17g", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<PreferencePair> synthetic_pairs(std::size_t n, const GmParams& hidden,
                                            std::uint64_t seed, double min_gap) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> acc(0.60, 0.95), sim(0.70, 0.90), pp(5.0, 95.0);
  auto triple = [&] {
    return MetricTriple{acc(rng), sim(rng), pp(rng), Granularity::kSentence};
  };
  std::vector<PreferencePair> pairs;
  while (pairs.size() < n) {
    auto a = triple();
    auto b = triple();
    const double ga = oracle::gm(a.acc, a.sim, a.pp, hidden.t1, hidden.t2, hidden.t3, hidden.t4);
    const double gb = oracle::gm(b.acc, b.sim, b.pp, hidden.t1, hidden.t2, hidden.t3, hidden.t4);
    if (std::abs(ga - gb) < min_gap) continue;
    const std::string id = "pair" + std::to_string(pairs.size());
    pairs.push_back(ga > gb ? PreferencePair{a, b, id} : PreferencePair{b, a, id});
  }
  return pairs;
}

FixtureSuite make_fixture_suite(std::size_t per_class, std::uint64_t seed,
                                const MarkerRecipe& recipe) {
  auto [x0, x1] = marker_corpora(per_class, recipe, seed);
  auto classifier = train_classifier(x0, x1, ClassifierConfig{});
  auto lm = train_lm(x0, x1, LmConfig{});
  auto idf = build_idf(x0, x1);
  return FixtureSuite{std::move(x0), std::move(x1), std::move(classifier), std::move(lm),
                      random_embeddings(16, seed + 1), std::move(idf)};
}

}  // namespace stylemetrics::testing
