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

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "stylemetrics/aggregate.hpp"
#include "stylemetrics/classifier.hpp"
#include "stylemetrics/language_model.hpp"
#include "stylemetrics/similarity.hpp"
#include "stylemetrics/text.hpp"

namespace stylemetrics::testing {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

Sentence sent(const std::string& text);
Corpus corpus_of(const std::vector<std::string>& lines, int id = 0, const std::string& name = "0");

// Two-style synthetic corpora. Every sentence has `markers` marker slots; a
// slot takes a word from the sentence's own class with probability p_own and
// from the other class otherwise. Filler words surround the markers.
struct MarkerRecipe {
  int markers = 5;
  double p_own = 0.9;
  int min_filler = 3;
  int max_filler = 8;
};

const std::vector<std::string>& marker_words(int style);
const std::vector<std::string>& filler_words();

Sentence marker_sentence(int style, const MarkerRecipe& recipe, std::mt19937_64& rng);
std::pair<Corpus, Corpus> marker_corpora(std::size_t per_class, const MarkerRecipe& recipe,
                                         std::uint64_t seed);

// Probability that the majority of the marker slots comes from the own class
// (ties split evenly): the accuracy of the Bayes-optimal rule for the recipe.
double marker_bayes_rate(const MarkerRecipe& recipe);

// Replaces each marker word by its counterpart in the other style.
Sentence flip_markers(const Sentence& s);

// Transfer set of n records built from the corpora: records alternate source
// style, originals are corpus sentences, transferred are flipped when
// `flip` is true and identical otherwise.
TransferSet marker_transfer_set(const Corpus& x0, const Corpus& x1, std::size_t n, bool flip);

// Gaussian word vectors for every marker and filler word.
EmbeddingTable random_embeddings(std::size_t dim, std::uint64_t seed);
std::string embeddings_text(const EmbeddingTable& emb, const std::vector<std::string>& words);

// Preference pairs labeled by GM under `hidden`; pairs whose GM gap is below
// `min_gap` are skipped.
std::vector<PreferencePair> synthetic_pairs(std::size_t n, const GmParams& hidden,
                                            std::uint64_t seed, double min_gap = 0.5);

// Classifier, LM, embeddings and idf trained on marker corpora.
struct FixtureSuite {
  Corpus x0, x1;
  ClassifierModel classifier;
  NGramLM lm;
  EmbeddingTable embeddings;
  IdfTable idf;

  EvaluationSuite suite() const { return {classifier, lm, embeddings, idf, {}}; }
};

FixtureSuite make_fixture_suite(std::size_t per_class, std::uint64_t seed,
                                const MarkerRecipe& recipe = MarkerRecipe{});

}  // namespace stylemetrics::testing
