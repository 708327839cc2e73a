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
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylemetrics/text.hpp"

namespace stylemetrics {

// Word vectors of a fixed dimension.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  // Returns false (and keeps the existing entry) when `word` is already
  // present. Throws ValidationError on a wrong length or non-finite entry.
  bool insert(std::string word, std::vector<double> vec);

  // nullptr when the word has no vector.
  const std::vector<double>* find(const std::string& word) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Loads the whitespace-separated text format: a word followed by `expected_dim`
// reals per line. A leading "<count> <dim>" header line is skipped. Duplicate
// words keep their first vector and produce a warning.
EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t expected_dim);

// Infers the dimension from the first vector line of an embedding file.
std::size_t detect_embedding_dim(const std::filesystem::path& path);

// Natural-log inverse document frequency over a sentence collection.
class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::unordered_map<std::string, double> weights, std::size_t corpus_size);

  // ln(|C| / df(word)); words never seen get ln(|C|), the df = 1 value.
  double weight(const std::string& word) const;
  double fallback_weight() const;

  std::size_t corpus_size() const { return corpus_size_; }
  const std::unordered_map<std::string, double>& weights() const { return weights_; }

  std::string to_json() const;
  static IdfTable from_json(const std::string& text, const std::string& source = "<idf>");

 private:
  std::unordered_map<std::string, double> weights_;
  std::size_t corpus_size_ = 0;
};

// df counts each word once per sentence. Throws EmptyCorpusError when the
// corpora hold no sentences.
IdfTable build_idf(std::span<const Corpus> corpora);
IdfTable build_idf(const Corpus& x0, const Corpus& x1);

void save_idf(const IdfTable& idf, const std::filesystem::path& path);
IdfTable load_idf(const std::filesystem::path& path);

struct SentenceVector {
  std::vector<double> values;
  bool is_zero = true;
};

// Sum of idf(w) * emb(w) over tokens with an embedding. The weighted sum is
// used instead of the weighted mean since cosine ignores the scale.
SentenceVector sentence_vector(const Sentence& s, const EmbeddingTable& emb, const IdfTable& idf);

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // one side was the zero vector
};

// Throws ValidationError on a dimension mismatch.
CosineResult cosine(const SentenceVector& u, const SentenceVector& v);

struct SimResult {
  double sim = 0.0;
  std::vector<double> per_pair;
  std::vector<bool> degenerate;  // per pair
  std::size_t degenerate_count = 0;
};

// Mean cosine between original and transferred vectors over all records.
// Degenerate pairs count as 0 in the mean.
SimResult sim_transfer_set(const TransferSet& ts, const EmbeddingTable& emb, const IdfTable& idf);

}  // namespace stylemetrics
