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
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylemetrics/text.hpp"

namespace stylemetrics {

// n-gram (n = 1..3) counts keyed by the space-joined n-gram.
using FeatureVector = std::map<std::string, int>;

// All 1-, 2- and 3-grams of <s> tokens </s>, excluding n-grams made only of
// padding. An empty sentence has no features.
FeatureVector extract_features(const Sentence& s);

struct ClassifierConfig {
  double l2 = 1e-4;
  double learning_rate = 0.5;
  int max_epochs = 10;
  int batch_size = 32;
  double dev_fraction = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ClassifyResult {
  int label = 0;
  std::array<double, 2> prob{0.5, 0.5};
};

// A frozen binary style classifier.
class StyleClassifier {
 public:
  virtual ~StyleClassifier() = default;
  virtual ClassifyResult classify(const Sentence& s) const = 0;
  virtual const LabelPair& labels() const = 0;
};

struct TrainMeta {
  int epochs = 0;
  int best_epoch = 0;
  double final_dev_accuracy = 0.0;
};

// Bag-of-n-grams multinomial logistic regression over two classes.
class NgramLogisticClassifier final : public StyleClassifier {
 public:
  // `weights` is row-major: weights[label * features.size() + j].
  NgramLogisticClassifier(LabelPair labels, std::vector<std::string> features,
                          std::vector<double> weights, std::array<double, 2> bias,
                          ClassifierConfig config, TrainMeta meta);

  ClassifyResult classify(const Sentence& s) const override;
  const LabelPair& labels() const override { return labels_; }

  // Unnormalized class scores.
  std::array<double, 2> scores(const Sentence& s) const;

  std::size_t num_features() const { return features_.size(); }
  // 0 for features outside the vocabulary.
  double weight(int label, const std::string& feature) const;
  const std::array<double, 2>& bias() const { return bias_; }
  const ClassifierConfig& config() const { return config_; }
  const TrainMeta& train_meta() const { return meta_; }

  std::string to_json() const;
  static NgramLogisticClassifier from_json(const std::string& text,
                                           const std::string& source = "<classifier>");

 private:
  LabelPair labels_;
  std::vector<std::string> features_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> weights_;
  std::array<double, 2> bias_;
  ClassifierConfig config_;
  TrainMeta meta_;
};

using ClassifierModel = NgramLogisticClassifier;

// Mini-batch SGD on the L2-regularized log loss. The last dev_fraction of a
// seeded shuffle is held out and the epoch with the best dev accuracy is kept.
ClassifierModel train_classifier(const Corpus& x0, const Corpus& x1, const ClassifierConfig& cfg);

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_classifier(const std::filesystem::path& path);

struct AccRecord {
  int indicator = 0;
  double target_prob = 0.0;
  int predicted_label = 0;
};

struct AccResult {
  double acc = 0.0;
  std::vector<AccRecord> per_record;
};

// Fraction of transferred sentences classified as their target style. Styles
// are matched to the classifier's labels by name.
AccResult acc_transfer_set(const StyleClassifier& classifier, const TransferSet& ts);

namespace logistic {

struct Example {
  std::vector<std::pair<std::size_t, double>> features;
  int label = 0;
};

struct Params {
  std::size_t num_features = 0;
  std::vector<double> weights;  // 2 x num_features, row-major
  std::array<double, 2> bias{0.0, 0.0};

  static Params zeros(std::size_t num_features);
};

std::array<double, 2> softmax(const std::array<double, 2>& scores);
std::array<double, 2> scores(const Params& p, const Example& x);

// Mean negative log-likelihood plus (l2 / 2) * ||weights||^2; the bias is
// not regularized. Writes the gradient into `grad` when non-null.
double regularized_log_loss(const Params& p, std::span<const Example> data, double l2,
                            Params* grad = nullptr);

}  // namespace logistic

}  // namespace stylemetrics
