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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylemetrics/aggregate.hpp"
#include "stylemetrics/text.hpp"

namespace stylemetrics {

// Pearson correlation of average ranks. Throws ValidationError on a length
// mismatch, fewer than two items, or a constant sequence.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

// Average (fractional) 1-based ranks; tied values share the mean rank.
std::vector<double> average_ranks(std::span<const double> xs);

double match_rate(std::span<const int> machine, std::span<const int> human);

struct BleuInputs {
  std::vector<Sentence> candidates;
  std::vector<Sentence> references;  // one per candidate
};

struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

// Reads two aligned files, one sentence per line. Blank lines are kept as
// empty sentences so the alignment holds. Tokens are not lowercased.
BleuInputs load_bleu_inputs(const std::filesystem::path& candidates,
                            const std::filesystem::path& references);

BleuStats bleu_stats(const BleuInputs& inputs);

// Corpus BLEU on a 0-100 scale with multi-bleu semantics: clipped n-gram
// precisions for n = 1..4, no smoothing, brevity penalty exp(1 - r/c) when
// c < r. Any zero precision gives 0.
double bleu(const BleuInputs& inputs);

// Fraction of pairs whose winner has the strictly larger GM; exact ties
// count one half.
double gm_pairwise_agreement(const GmParams& p, std::span<const PreferencePair> pairs);

enum class AnnotationKind { kStyleChoice, kRating, kPairwisePreference };

// One human judgment. Ratings carry an aspect ("similarity" or "fluency");
// pairwise preferences name the preferred and dispreferred record ids.
struct HumanAnnotation {
  std::string item_id;
  AnnotationKind kind = AnnotationKind::kRating;
  int value = 0;  // style id or rating
  std::string aspect;
  std::string winner;
  std::string loser;
};

std::vector<HumanAnnotation> load_annotations(const std::filesystem::path& path);

}  // namespace stylemetrics
