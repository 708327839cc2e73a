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

#include "stylemetrics/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "stylemetrics/errors.hpp"
#include "stylemetrics/io.hpp"

namespace stylemetrics {
namespace {

using nlohmann::json;

constexpr int kClassifierFormatVersion = 1;
constexpr int kMaxOrder = 3;

struct LabeledSentence {
  const Sentence* sentence;
  int label;
};

double accuracy(const logistic::Params& p, std::span<const logistic::Example> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& x : data) {
    auto s = logistic::scores(p, x);
    int label = s[1] > s[0] ? 1 : 0;
    if (label == x.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

logistic::Example to_example(const FeatureVector& fv, int label,
                             const std::unordered_map<std::string, std::size_t>& index) {
  logistic::Example x;
  x.label = label;
  for (const auto& [feat, count] : fv) {
    auto it = index.find(feat);
    if (it != index.end()) x.features.emplace_back(it->second, static_cast<double>(count));
  }
  return x;
}

}  // namespace

FeatureVector extract_features(const Sentence& s) {
  FeatureVector fv;
  if (s.empty()) return fv;
  std::vector<const std::string*> padded;
  const std::string bos = kBos, eos = kEos;
  padded.push_back(&bos);
  for (const auto& tok : s.tokens) padded.push_back(&tok);
  padded.push_back(&eos);
  const std::size_t last = padded.size() - 1;
  for (std::size_t i = 0; i < padded.size(); ++i) {
    std::string key;
    for (int n = 1; n <= kMaxOrder && i + n <= padded.size(); ++n) {
      if (n > 1) key.push_back(' ');
      key += *padded[i + n - 1];
      // Skip n-grams that lie entirely in the padding.
      bool padding_only = (i == 0 && n == 1) || i == last;
      if (!padding_only) ++fv[key];
    }
  }
  return fv;
}

void ClassifierConfig::validate() const {
  if (!(l2 >= 0.0)) throw ValidationError("classifier l2 must be nonnegative");
  if (!(learning_rate > 0.0)) throw ValidationError("classifier learning rate must be positive");
  if (max_epochs < 1) throw ValidationError("classifier max_epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("classifier batch_size must be at least 1");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw ValidationError("classifier dev_fraction must lie in (0, 1)");
  }
}

namespace logistic {

Params Params::zeros(std::size_t num_features) {
  Params p;
  p.num_features = num_features;
  p.weights.assign(2 * num_features, 0.0);
  return p;
}

std::array<double, 2> softmax(const std::array<double, 2>& s) {
  const double m = std::max(s[0], s[1]);
  const double e0 = std::exp(s[0] - m), e1 = std::exp(s[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

std::array<double, 2> scores(const Params& p, const Example& x) {
  std::array<double, 2> s = p.bias;
  const double* w1 = p.weights.data() + p.num_features;
  for (const auto& [j, v] : x.features) {
    s[0] += p.weights[j] * v;
    s[1] += w1[j] * v;
  }
  return s;
}

double regularized_log_loss(const Params& p, std::span<const Example> data, double l2,
                            Params* grad) {
  if (grad) *grad = Params::zeros(p.num_features);
  double loss = 0.0;
  const double inv_n = data.empty() ? 0.0 : 1.0 / static_cast<double>(data.size());
  for (const auto& x : data) {
    auto s = scores(p, x);
    const double m = std::max(s[0], s[1]);
    const double log_z = m + std::log(std::exp(s[0] - m) + std::exp(s[1] - m));
    loss -= (s[x.label] - log_z) * inv_n;
    if (grad) {
      auto prob = softmax(s);
      for (int k = 0; k < 2; ++k) {
        const double r = (prob[k] - (k == x.label ? 1.0 : 0.0)) * inv_n;
        grad->bias[k] += r;
        double* row = grad->weights.data() + k * p.num_features;
        for (const auto& [j, v] : x.features) row[j] += r * v;
      }
    }
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    sq += p.weights[i] * p.weights[i];
    if (grad) grad->weights[i] += l2 * p.weights[i];
  }
  return loss + 0.5 * l2 * sq;
}

}  // namespace logistic

NgramLogisticClassifier::NgramLogisticClassifier(LabelPair labels,
                                                 std::vector<std::string> features,
                                                 std::vector<double> weights,
                                                 std::array<double, 2> bias,
                                                 ClassifierConfig config, TrainMeta meta)
    : labels_(std::move(labels)),
      features_(std::move(features)),
      weights_(std::move(weights)),
      bias_(bias),
      config_(config),
      meta_(meta) {
  if (weights_.size() != 2 * features_.size()) {
    throw ValidationError("classifier weight matrix does not match the feature vocabulary");
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw ValidationError("classifier has non-finite weights");
  }
  if (!std::isfinite(bias_[0]) || !std::isfinite(bias_[1])) {
    throw ValidationError("classifier has non-finite bias");
  }
  index_.reserve(features_.size());
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (!index_.emplace(features_[j], j).second) {
      throw ValidationError("duplicate classifier feature '" + features_[j] + "'");
    }
  }
}

std::array<double, 2> NgramLogisticClassifier::scores(const Sentence& s) const {
  std::array<double, 2> out = bias_;
  const std::size_t f = features_.size();
  for (const auto& [feat, count] : extract_features(s)) {
    auto it = index_.find(feat);
    if (it == index_.end()) continue;
    out[0] += weights_[it->second] * count;
    out[1] += weights_[f + it->second] * count;
  }
  return out;
}

ClassifyResult NgramLogisticClassifier::classify(const Sentence& s) const {
  ClassifyResult r;
  r.prob = logistic::softmax(scores(s));
  r.label = r.prob[1] > r.prob[0] ? 1 : 0;
  return r;
}

double NgramLogisticClassifier::weight(int label, const std::string& feature) const {
  auto it = index_.find(feature);
  if (it == index_.end()) return 0.0;
  return weights_[static_cast<std::size_t>(label) * features_.size() + it->second];
}

std::string NgramLogisticClassifier::to_json() const {
  const std::size_t f = features_.size();
  json doc = {
      {"format", "stylemetrics.classifier"},
      {"version", kClassifierFormatVersion},
      {"labels", labels_},
      {"config",
       {{"l2", config_.l2},
        {"learning_rate", config_.learning_rate},
        {"max_epochs", config_.max_epochs},
        {"batch_size", config_.batch_size},
        {"dev_fraction", config_.dev_fraction},
        {"seed", config_.seed}}},
      {"train_meta",
       {{"epochs", meta_.epochs},
        {"best_epoch", meta_.best_epoch},
        {"final_dev_accuracy", meta_.final_dev_accuracy}}},
      {"bias", bias_},
      {"features", features_},
      {"weights",
       {std::vector<double>(weights_.begin(), weights_.begin() + static_cast<std::ptrdiff_t>(f)),
        std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(f), weights_.end())}}};
  return doc.dump() + "\n";
}

NgramLogisticClassifier NgramLogisticClassifier::from_json(const std::string& text,
                                                           const std::string& source) {
  try {
    json doc = json::parse(text);
    if (doc.value("format", "") != "stylemetrics.classifier") {
      throw ParseError(source, 0, "not a classifier model");
    }
    if (doc.at("version").get<int>() != kClassifierFormatVersion) {
      throw ParseError(source, 0, "unsupported classifier model version");
    }
    const auto& c = doc.at("config");
    ClassifierConfig cfg{c.at("l2").get<double>(),        c.at("learning_rate").get<double>(),
                         c.at("max_epochs").get<int>(),   c.at("batch_size").get<int>(),
                         c.at("dev_fraction").get<double>(), c.at("seed").get<std::uint64_t>()};
    const auto& m = doc.at("train_meta");
    TrainMeta meta{m.at("epochs").get<int>(), m.at("best_epoch").get<int>(),
                   m.at("final_dev_accuracy").get<double>()};
    auto features = doc.at("features").get<std::vector<std::string>>();
    auto rows = doc.at("weights").get<std::vector<std::vector<double>>>();
    if (rows.size() != 2 || rows[0].size() != features.size() ||
        rows[1].size() != features.size()) {
      throw ParseError(source, 0, "weight matrix shape does not match features");
    }
    std::vector<double> weights = std::move(rows[0]);
    weights.insert(weights.end(), rows[1].begin(), rows[1].end());
    return NgramLogisticClassifier(doc.at("labels").get<LabelPair>(), std::move(features),
                                   std::move(weights), doc.at("bias").get<std::array<double, 2>>(),
                                   cfg, meta);
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("invalid classifier model: ") + e.what());
  }
}

ClassifierModel train_classifier(const Corpus& x0, const Corpus& x1, const ClassifierConfig& cfg) {
  cfg.validate();
  if (x0.sentences.empty() || x1.sentences.empty()) {
    throw EmptyCorpusError("classifier training needs two non-empty corpora");
  }
  if (x0.style.name == x1.style.name) {
    throw ValidationError("classifier corpora must carry distinct style names");
  }

  std::vector<LabeledSentence> all;
  all.reserve(x0.sentences.size() + x1.sentences.size());
  for (const auto& s : x0.sentences) all.push_back({&s, 0});
  for (const auto& s : x1.sentences) all.push_back({&s, 1});

  std::mt19937_64 rng(cfg.seed);
  std::shuffle(all.begin(), all.end(), rng);
  std::size_t n_dev = static_cast<std::size_t>(std::floor(cfg.dev_fraction * all.size()));
  n_dev = std::clamp<std::size_t>(n_dev, 1, all.size() - 1);
  const std::size_t n_train = all.size() - n_dev;

  // Feature vocabulary from the training split, in lexicographic order.
  std::vector<FeatureVector> feats;
  feats.reserve(all.size());
  std::map<std::string, std::size_t> vocab;
  for (std::size_t i = 0; i < all.size(); ++i) {
    feats.push_back(extract_features(*all[i].sentence));
    if (i < n_train) {
      for (const auto& kv : feats.back()) vocab.emplace(kv.first, 0);
    }
  }
  std::vector<std::string> features;
  features.reserve(vocab.size());
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(vocab.size());
  for (auto& kv : vocab) {
    index.emplace(kv.first, features.size());
    features.push_back(kv.first);
  }

  std::vector<logistic::Example> train, dev;
  train.reserve(n_train);
  dev.reserve(n_dev);
  for (std::size_t i = 0; i < all.size(); ++i) {
    (i < n_train ? train : dev).push_back(to_example(feats[i], all[i].label, index));
  }
  feats.clear();

  const std::size_t f = features.size();
  auto params = logistic::Params::zeros(f);
  auto best = params;
  double best_dev = -1.0;
  int best_epoch = 0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const double decay = 1.0 - cfg.learning_rate * cfg.l2;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      // Residuals are computed against the pre-update parameters.
      std::vector<std::array<double, 2>> residuals;
      residuals.reserve(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const auto& x = train[order[b]];
        auto prob = logistic::softmax(logistic::scores(params, x));
        residuals.push_back({prob[0] - (x.label == 0 ? 1.0 : 0.0),
                             prob[1] - (x.label == 1 ? 1.0 : 0.0)});
      }
      if (cfg.l2 > 0.0) {
        for (auto& w : params.weights) w *= decay;
      }
      for (std::size_t b = start; b < end; ++b) {
        const auto& x = train[order[b]];
        const auto& r = residuals[b - start];
        for (int k = 0; k < 2; ++k) {
          params.bias[k] -= step * r[k];
          double* row = params.weights.data() + k * f;
          for (const auto& [j, v] : x.features) row[j] -= step * r[k] * v;
        }
      }
    }
    const double dev_acc = accuracy(params, dev);
    if (dev_acc > best_dev) {
      best_dev = dev_acc;
      best = params;
      best_epoch = epoch;
    }
  }

  TrainMeta meta{cfg.max_epochs, best_epoch, best_dev};
  return NgramLogisticClassifier({x0.style.name, x1.style.name}, std::move(features),
                                 std::move(best.weights), best.bias, cfg, meta);
}

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model.to_json());
}

ClassifierModel load_classifier(const std::filesystem::path& path) {
  return ClassifierModel::from_json(read_file(path), path.string());
}

AccResult acc_transfer_set(const StyleClassifier& classifier, const TransferSet& ts) {
  if (ts.records.empty()) throw ValidationError("cannot compute Acc of an empty transfer set");
  const auto& labels = classifier.labels();
  AccResult result;
  result.per_record.reserve(ts.records.size());
  std::size_t hits = 0;
  for (const auto& r : ts.records) {
    int target;
    if (r.target_style.name == labels[0]) {
      target = 0;
    } else if (r.target_style.name == labels[1]) {
      target = 1;
    } else {
      throw ValidationError("record '" + r.id + "' targets style '" + r.target_style.name +
                            "', which the classifier does not know (labels: " + labels[0] + ", " +
                            labels[1] + ")");
    }
    auto c = classifier.classify(r.transferred);
    AccRecord rec{c.label == target ? 1 : 0, c.prob[static_cast<std::size_t>(target)], c.label};
    hits += static_cast<std::size_t>(rec.indicator);
    result.per_record.push_back(rec);
  }
  result.acc = static_cast<double>(hits) / static_cast<double>(ts.records.size());
  return result;
}

}  // namespace stylemetrics
