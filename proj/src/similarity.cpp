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

#include "stylemetrics/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "stylemetrics/errors.hpp"
#include "stylemetrics/io.hpp"
#include "stylemetrics/log.hpp"

namespace stylemetrics {
namespace {

using nlohmann::json;

constexpr int kIdfFormatVersion = 1;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool parse_double(std::string_view field, double& out) {
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

bool is_unsigned_integer(std::string_view field) {
  if (field.empty()) return false;
  for (char c : field) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

bool EmbeddingTable::insert(std::string word, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw ValidationError("embedding for '" + word + "' has " + std::to_string(vec.size()) +
                          " values, expected " + std::to_string(dim_));
  }
  for (double x : vec) {
    if (!std::isfinite(x)) throw ValidationError("embedding for '" + word + "' is not finite");
  }
  return vectors_.try_emplace(std::move(word), std::move(vec)).second;
}

const std::vector<double>* EmbeddingTable::find(const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings '" + path.string() + "'");
  const std::string source = path.string();
  EmbeddingTable table(expected_dim);
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (!seen_content) {
      seen_content = true;
      if (expected_dim != 1 && fields.size() == 2 && is_unsigned_integer(fields[0]) &&
          is_unsigned_integer(fields[1])) {
        continue;  // word2vec-style "<count> <dim>" header
      }
    }
    if (fields.size() - 1 != expected_dim) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(expected_dim) + " values, found " +
                           std::to_string(fields.size() - 1));
    }
    vec.assign(expected_dim, 0.0);
    for (std::size_t k = 0; k < expected_dim; ++k) {
      if (!parse_double(fields[k + 1], vec[k]) || !std::isfinite(vec[k])) {
        throw ParseError(source, lineno, "invalid number '" + std::string(fields[k + 1]) + "'");
      }
    }
    std::string word(fields[0]);
    if (!table.insert(word, vec)) {
      warn(source + ":" + std::to_string(lineno) + ": duplicate embedding for '" + word +
           "' ignored; keeping the first vector");
    }
  }
  if (in.bad()) throw IoError("error while reading embeddings '" + source + "'");
  return table;
}

std::size_t detect_embedding_dim(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings '" + path.string() + "'");
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (first && fields.size() == 2 && is_unsigned_integer(fields[0]) &&
        is_unsigned_integer(fields[1])) {
      first = false;
      continue;
    }
    if (fields.size() < 2) throw ParseError(path.string(), 0, "cannot infer embedding dimension");
    return fields.size() - 1;
  }
  throw ParseError(path.string(), 0, "embedding file has no vectors");
}

IdfTable::IdfTable(std::unordered_map<std::string, double> weights, std::size_t corpus_size)
    : weights_(std::move(weights)), corpus_size_(corpus_size) {}

double IdfTable::fallback_weight() const {
  return corpus_size_ > 0 ? std::log(static_cast<double>(corpus_size_)) : 0.0;
}

double IdfTable::weight(const std::string& word) const {
  auto it = weights_.find(word);
  return it == weights_.end() ? fallback_weight() : it->second;
}

std::string IdfTable::to_json() const {
  json weights = json::object();
  for (const auto& [word, w] : weights_) weights[word] = w;
  json doc = {{"format", "stylemetrics.idf"},
              {"version", kIdfFormatVersion},
              {"log_base", "e"},
              {"corpus_size", corpus_size_},
              {"weights", std::move(weights)}};
  return doc.dump(1) + "\n";
}

IdfTable IdfTable::from_json(const std::string& text, const std::string& source) {
  try {
    json doc = json::parse(text);
    if (doc.value("format", "") != "stylemetrics.idf") {
      throw ParseError(source, 0, "not an idf table");
    }
    if (doc.at("version").get<int>() != kIdfFormatVersion) {
      throw ParseError(source, 0, "unsupported idf table version");
    }
    std::unordered_map<std::string, double> weights;
    for (const auto& [word, w] : doc.at("weights").items()) {
      double v = w.get<double>();
      if (!(v >= 0.0)) throw ParseError(source, 0, "negative idf weight for '" + word + "'");
      weights.emplace(word, v);
    }
    return IdfTable(std::move(weights), doc.at("corpus_size").get<std::size_t>());
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("invalid idf table: ") + e.what());
  }
}

namespace {

IdfTable build_idf_impl(const std::vector<const Corpus*>& corpora) {
  std::unordered_map<std::string, std::size_t> df;
  std::size_t n = 0;
  std::unordered_set<std::string_view> seen;
  for (const Corpus* corpus : corpora) {
    for (const auto& s : corpus->sentences) {
      ++n;
      seen.clear();
      for (const auto& tok : s.tokens) {
        if (seen.insert(tok).second) ++df[tok];
      }
    }
  }
  if (n == 0) throw EmptyCorpusError("cannot build idf from an empty corpus");
  std::unordered_map<std::string, double> weights;
  weights.reserve(df.size());
  const double size = static_cast<double>(n);
  for (const auto& [word, count] : df) {
    weights.emplace(word, std::log(size / static_cast<double>(count)));
  }
  return IdfTable(std::move(weights), n);
}

}  // namespace

IdfTable build_idf(std::span<const Corpus> corpora) {
  std::vector<const Corpus*> ptrs;
  for (const auto& c : corpora) ptrs.push_back(&c);
  return build_idf_impl(ptrs);
}

IdfTable build_idf(const Corpus& x0, const Corpus& x1) { return build_idf_impl({&x0, &x1}); }

void save_idf(const IdfTable& idf, const std::filesystem::path& path) {
  write_file_atomic(path, idf.to_json());
}

IdfTable load_idf(const std::filesystem::path& path) {
  return IdfTable::from_json(read_file(path), path.string());
}

SentenceVector sentence_vector(const Sentence& s, const EmbeddingTable& emb, const IdfTable& idf) {
  SentenceVector out;
  out.values.assign(emb.dim(), 0.0);
  for (const auto& tok : s.tokens) {
    const auto* vec = emb.find(tok);
    if (vec == nullptr) continue;
    const double w = idf.weight(tok);
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += w * (*vec)[k];
  }
  out.is_zero = true;
  for (double x : out.values) {
    if (x != 0.0) {
      out.is_zero = false;
      break;
    }
  }
  return out;
}

CosineResult cosine(const SentenceVector& u, const SentenceVector& v) {
  if (u.values.size() != v.values.size()) {
    throw ValidationError("cosine of vectors with dimensions " + std::to_string(u.values.size()) +
                          " and " + std::to_string(v.values.size()));
  }
  if (u.is_zero || v.is_zero) return {0.0, true};
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    dot += u.values[k] * v.values[k];
    nu += u.values[k] * u.values[k];
    nv += v.values[k] * v.values[k];
  }
  // Squared norms of tiny vectors can underflow even when is_zero is false.
  if (nu == 0.0 || nv == 0.0) return {0.0, true};
  // sqrt(nu * nv) keeps cosine(u, u) exactly 1.
  double c = dot / std::sqrt(nu * nv);
  return {std::clamp(c, -1.0, 1.0), false};
}

SimResult sim_transfer_set(const TransferSet& ts, const EmbeddingTable& emb, const IdfTable& idf) {
  if (ts.records.empty()) throw ValidationError("cannot compute Sim of an empty transfer set");
  SimResult result;
  result.per_pair.reserve(ts.records.size());
  result.degenerate.reserve(ts.records.size());
  double total = 0.0;
  for (const auto& r : ts.records) {
    auto c = cosine(sentence_vector(r.original, emb, idf), sentence_vector(r.transferred, emb, idf));
    if (c.degenerate) ++result.degenerate_count;
    result.per_pair.push_back(c.value);
    result.degenerate.push_back(c.degenerate);
    total += c.value;
  }
  result.sim = total / static_cast<double>(ts.records.size());
  return result;
}

}  // namespace stylemetrics
