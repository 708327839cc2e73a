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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylemetrics/classifier.hpp"
#include "stylemetrics/language_model.hpp"
#include "stylemetrics/similarity.hpp"
#include "stylemetrics/text.hpp"

namespace stylemetrics {

// Thresholds of the adjusted geometric mean. Acc and Sim enter scaled by
// 100, PP enters raw.
struct GmParams {
  double t1 = 63.0;
  double t2 = 71.0;
  double t3 = 97.0;
  double t4 = -37.0;

  // Throws ValidationError unless all finite and t3 > t4.
  void validate() const;
  std::array<double, 4> as_array() const { return {t1, t2, t3, t4}; }
  static GmParams from_array(const std::array<double, 4>& t) { return {t[0], t[1], t[2], t[3]}; }
  // "t1,t2,t3,t4"
  static GmParams parse(const std::string& text);

  bool operator==(const GmParams&) const = default;
};

enum class Granularity { kSentence, kCorpus };

const char* to_string(Granularity g);
Granularity parse_granularity(const std::string& text);

struct MetricTriple {
  double acc = 0.0;  // [0, 1]
  double sim = 0.0;  // [-1, 1]
  double pp = 1.0;   // >= 1
  Granularity granularity = Granularity::kCorpus;

  void validate() const;
};

struct PreferencePair {
  MetricTriple winner;
  MetricTriple loser;
  std::string annotation_id;
};

// (max(100 acc - t1, 0) * max(100 sim - t2, 0) * min(max(t3 - pp, 0), max(pp - t4, 0)))^(1/3)
double gm_score(const MetricTriple& m, const GmParams& p);

// d gm / d (t1..t4). Zero wherever gm is 0; only the active branch of the
// min receives a gradient (t3 on ties).
std::array<double, 4> gm_subgradient(const MetricTriple& m, const GmParams& p);

// max(0, 1 - gm(winner) + gm(loser))
double gm_hinge_loss(const GmParams& p, const PreferencePair& pair);

struct GmFitConfig {
  double learning_rate = 2.0;
  int max_epochs = 1000;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.2;
  // Starting point; derived from the training pairs when unset.
  std::optional<GmParams> init;
};

struct GmFitResult {
  GmParams params;
  double holdout_agreement = 0.0;
  GmParams initial;
  int best_epoch = 0;  // 0 is the initialization
  std::size_t train_pairs = 0;
  std::size_t holdout_pairs = 0;
};

// t1 = t2 = 50, t3 = 90th percentile of pp over both sides of every pair,
// t4 = -median(pp).
GmParams initial_gm_params(std::span<const PreferencePair> pairs);

// Full-batch subgradient descent on the mean hinge loss over the training
// split; after every step t3 - t4 is kept above 1. Returns the iterate with
// the best holdout agreement (earliest on ties).
GmFitResult fit_gm_params(std::span<const PreferencePair> pairs, const GmFitConfig& cfg);

std::vector<PreferencePair> load_preference_pairs(const std::filesystem::path& path);
void save_preference_pairs(std::span<const PreferencePair> pairs, const std::filesystem::path& path);

nlohmann::json params_to_json(const GmParams& p);
nlohmann::json triple_to_json(const MetricTriple& m);
MetricTriple triple_from_json(const nlohmann::json& j);

struct SuiteFingerprints {
  std::string classifier;
  std::string language_model;
  std::string embeddings;
  std::string idf;
};

struct EvaluationSuite {
  const StyleClassifier& classifier;
  const LanguageModel& lm;
  const EmbeddingTable& embeddings;
  const IdfTable& idf;
  SuiteFingerprints fingerprints;
};

struct RecordScore {
  std::string id;
  int indicator = 0;
  int predicted_label = 0;
  double target_prob = 0.0;
  double cosine = 0.0;
  bool degenerate = false;
  double sentence_pp = 1.0;
  double sentence_gm = 0.0;
};

struct MetricReport {
  double acc = 0.0;
  double sim = 0.0;
  double pp = 1.0;
  double gm = 0.0;
  GmParams params;
  std::size_t records = 0;
  std::size_t degenerate_count = 0;
  std::size_t total_tokens = 0;
  std::optional<CheckpointMeta> checkpoint_meta;
  SuiteFingerprints fingerprints;
  std::vector<RecordScore> per_record;

  MetricTriple triple() const { return {acc, sim, pp, Granularity::kCorpus}; }
};

// Scores every record and aggregates. Sentence-level GM uses the target-class
// probability in place of Acc and per-sentence perplexity in place of PP.
MetricReport evaluate(const TransferSet& ts, const EvaluationSuite& suite, const GmParams& params);

nlohmann::json report_to_json(const MetricReport& report, bool include_per_record = true);

// Structural check of a serialized report. Returns one message per problem;
// empty when the document conforms.
std::vector<std::string> check_report_schema(const nlohmann::json& doc);

struct TrajectoryPoint {
  double epoch = 0.0;
  MetricTriple triple;
  double gm = 0.0;
  std::string source_path;
};

// Highest gm; ties go to higher sim, then lower pp, then earlier epoch.
TrajectoryPoint select_checkpoint(std::span<const TrajectoryPoint> points);

// Header "epoch,acc,sim,pp,gm,selected"; rows in the given order.
std::string trajectory_csv(std::span<const TrajectoryPoint> points,
                           const TrajectoryPoint* selected = nullptr);

}  // namespace stylemetrics
