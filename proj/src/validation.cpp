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

#include "stylemetrics/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "stylemetrics/errors.hpp"

namespace stylemetrics {
namespace {

using nlohmann::json;

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts ngram_counts(const Sentence& s, std::size_t n) {
  NgramCounts counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key = s.tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back(' ');
      key += s.tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

std::vector<Sentence> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(tokenize(line, /*lowercase=*/false));
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return out;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    // Positions i..j (0-based) share the mean of ranks i+1..j+1.
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("spearman_rho: sequences have different lengths (" +
                          std::to_string(xs.size()) + " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw ValidationError("spearman_rho: need at least two items");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("spearman_rho: a sequence is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double match_rate(std::span<const int> machine, std::span<const int> human) {
  if (machine.size() != human.size()) {
    throw ValidationError("match_rate: sequences have different lengths (" +
                          std::to_string(machine.size()) + " vs " + std::to_string(human.size()) +
                          ")");
  }
  if (machine.empty()) throw ValidationError("match_rate: need at least one item");
  std::size_t same = 0;
  for (std::size_t i = 0; i < machine.size(); ++i) {
    if (machine[i] == human[i]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(machine.size());
}

BleuInputs load_bleu_inputs(const std::filesystem::path& candidates,
                            const std::filesystem::path& references) {
  BleuInputs inputs{read_lines(candidates), read_lines(references)};
  if (inputs.candidates.size() != inputs.references.size()) {
    throw ValidationError("'" + candidates.string() + "' has " +
                          std::to_string(inputs.candidates.size()) + " lines but '" +
                          references.string() + "' has " + std::to_string(inputs.references.size()));
  }
  return inputs;
}

BleuStats bleu_stats(const BleuInputs& inputs) {
  if (inputs.candidates.size() != inputs.references.size()) {
    throw ValidationError("bleu: " + std::to_string(inputs.candidates.size()) + " candidates but " +
                          std::to_string(inputs.references.size()) + " references");
  }
  if (inputs.candidates.empty()) throw ValidationError("bleu: no sentences");
  BleuStats stats;
  for (std::size_t i = 0; i < inputs.candidates.size(); ++i) {
    const auto& cand = inputs.candidates[i];
    const auto& ref = inputs.references[i];
    stats.candidate_length += cand.size();
    stats.reference_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      if (cand.size() < n) continue;
      stats.totals[n - 1] += cand.size() - n + 1;
      const auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : ngram_counts(cand, n)) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) stats.matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  return stats;
}

double bleu(const BleuInputs& inputs) {
  const auto stats = bleu_stats(inputs);
  if (stats.candidate_length == 0) throw ValidationError("bleu: total candidate length is zero");
  double log_precision = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (stats.matches[n] == 0 || stats.totals[n] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(stats.matches[n]) /
                              static_cast<double>(stats.totals[n]));
  }
  double brevity = 1.0;
  if (stats.candidate_length < stats.reference_length) {
    brevity = std::exp(1.0 - static_cast<double>(stats.reference_length) /
                                 static_cast<double>(stats.candidate_length));
  }
  return 100.0 * brevity * std::exp(log_precision / 4.0);
}

double gm_pairwise_agreement(const GmParams& p, std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw ValidationError("gm_pairwise_agreement: no pairs");
  double agree = 0.0;
  for (const auto& pair : pairs) {
    const double w = gm_score(pair.winner, p);
    const double l = gm_score(pair.loser, p);
    if (w > l) {
      agree += 1.0;
    } else if (w == l) {
      agree += 0.5;
    }
  }
  return agree / static_cast<double>(pairs.size());
}

std::vector<HumanAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations '" + path.string() + "'");
  std::vector<HumanAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      HumanAnnotation a;
      a.item_id = obj.at("item_id").get<std::string>();
      const auto kind = obj.at("kind").get<std::string>();
      if (kind == "style_choice") {
        a.kind = AnnotationKind::kStyleChoice;
        a.value = obj.at("value").get<int>();
        if (a.value != 0 && a.value != 1) {
          throw ParseError(path.string(), lineno, "style_choice value must be 0 or 1");
        }
      } else if (kind == "rating_1_to_4") {
        a.kind = AnnotationKind::kRating;
        a.value = obj.at("value").get<int>();
        if (a.value < 1 || a.value > 4) {
          throw ParseError(path.string(), lineno, "rating must be an integer from 1 to 4");
        }
        a.aspect = obj.at("aspect").get<std::string>();
        if (a.aspect != "similarity" && a.aspect != "fluency") {
          throw ParseError(path.string(), lineno, "rating aspect must be 'similarity' or 'fluency'");
        }
      } else if (kind == "pairwise_preference") {
        a.kind = AnnotationKind::kPairwisePreference;
        const auto& v = obj.at("value");
        a.winner = v.at("winner").get<std::string>();
        a.loser = v.at("loser").get<std::string>();
      } else {
        throw ParseError(path.string(), lineno, "unknown annotation kind '" + kind + "'");
      }
      out.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

}  // namespace stylemetrics
