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

#include "stylemetrics/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "stylemetrics/errors.hpp"
#include "stylemetrics/io.hpp"
#include "stylemetrics/validation.hpp"

namespace stylemetrics {
namespace {

using nlohmann::json;

constexpr int kReportFormatVersion = 1;
// Projection keeps t3 - t4 at least this wide.
constexpr double kMinPpWindow = 1.0 + 1e-6;

struct Factors {
  double acc, sim, low, high;  // low = [t3 - pp]+, high = [pp - t4]+
};

Factors factors(const MetricTriple& m, const GmParams& p) {
  return {std::max(100.0 * m.acc - p.t1, 0.0), std::max(100.0 * m.sim - p.t2, 0.0),
          std::max(p.t3 - m.pp, 0.0), std::max(m.pp - p.t4, 0.0)};
}

void project(GmParams& p) {
  if (p.t3 - p.t4 < kMinPpWindow) {
    const double mid = 0.5 * (p.t3 + p.t4);
    p.t3 = mid + 0.5 * kMinPpWindow;
    p.t4 = mid - 0.5 * kMinPpWindow;
  }
}

// Linear interpolation between order statistics.
double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

// Shortest representation that round-trips.
std::string format_number(double x) { return json(x).dump(); }

}  // namespace

void GmParams::validate() const {
  for (double t : as_array()) {
    if (!std::isfinite(t)) throw ValidationError("GM thresholds must be finite");
  }
  if (!(t3 > t4)) throw ValidationError("GM thresholds need t3 > t4");
}

GmParams GmParams::parse(const std::string& text) {
  std::array<double, 4> t{};
  std::stringstream ss(text);
  std::string field;
  std::size_t i = 0;
  while (std::getline(ss, field, ',')) {
    if (i >= 4) throw ValidationError("expected four comma-separated thresholds, got '" + text + "'");
    try {
      std::size_t used = 0;
      t[i] = std::stod(field, &used);
      if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw ValidationError("invalid threshold '" + field + "' in '" + text + "'");
    }
    ++i;
  }
  if (i != 4) throw ValidationError("expected four comma-separated thresholds, got '" + text + "'");
  auto p = from_array(t);
  p.validate();
  return p;
}

const char* to_string(Granularity g) {
  return g == Granularity::kSentence ? "sentence" : "corpus";
}

Granularity parse_granularity(const std::string& text) {
  if (text == "sentence") return Granularity::kSentence;
  if (text == "corpus") return Granularity::kCorpus;
  throw ValidationError("granularity must be 'sentence' or 'corpus', got '" + text + "'");
}

void MetricTriple::validate() const {
  if (!(acc >= 0.0 && acc <= 1.0)) throw ValidationError("acc must lie in [0, 1]");
  if (!(sim >= -1.0 && sim <= 1.0)) throw ValidationError("sim must lie in [-1, 1]");
  if (!(pp >= 1.0) || !std::isfinite(pp)) throw ValidationError("pp must be finite and >= 1");
}

double gm_score(const MetricTriple& m, const GmParams& p) {
  const auto f = factors(m, p);
  const double product = f.acc * f.sim * std::min(f.low, f.high);
  return product > 0.0 ? std::cbrt(product) : 0.0;
}

std::array<double, 4> gm_subgradient(const MetricTriple& m, const GmParams& p) {
  const auto f = factors(m, p);
  const double pp_factor = std::min(f.low, f.high);
  const double product = f.acc * f.sim * pp_factor;
  if (!(product > 0.0)) return {0.0, 0.0, 0.0, 0.0};
  const double third = std::cbrt(product) / 3.0;
  std::array<double, 4> g{-third / f.acc, -third / f.sim, 0.0, 0.0};
  if (f.low <= f.high) {
    g[2] = third / pp_factor;
  } else {
    g[3] = -third / pp_factor;
  }
  return g;
}

double gm_hinge_loss(const GmParams& p, const PreferencePair& pair) {
  return std::max(0.0, 1.0 - gm_score(pair.winner, p) + gm_score(pair.loser, p));
}

GmParams initial_gm_params(std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw ValidationError("cannot initialize GM thresholds without pairs");
  std::vector<double> pps;
  pps.reserve(2 * pairs.size());
  for (const auto& pair : pairs) {
    pps.push_back(pair.winner.pp);
    pps.push_back(pair.loser.pp);
  }
  GmParams p{50.0, 50.0, percentile(pps, 0.9), -percentile(pps, 0.5)};
  project(p);
  return p;
}

GmFitResult fit_gm_params(std::span<const PreferencePair> pairs, const GmFitConfig& cfg) {
  if (pairs.size() < 2) throw ValidationError("fitting GM thresholds needs at least two pairs");
  if (!(cfg.learning_rate >= 0.0)) throw ValidationError("learning rate must be nonnegative");
  if (cfg.max_epochs < 0) throw ValidationError("max_epochs must be nonnegative");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0)) {
    throw ValidationError("holdout_fraction must lie in (0, 1)");
  }

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * pairs.size()));
  n_hold = std::clamp<std::size_t>(n_hold, 1, pairs.size() - 1);
  std::vector<PreferencePair> train, holdout;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i + n_hold < order.size() ? train : holdout).push_back(pairs[order[i]]);
  }

  GmParams params = cfg.init ? *cfg.init : initial_gm_params(train);
  params.validate();
  project(params);

  GmFitResult result;
  result.initial = params;
  result.params = params;
  result.holdout_agreement = gm_pairwise_agreement(params, holdout);
  result.train_pairs = train.size();
  result.holdout_pairs = holdout.size();

  auto any_positive = [&](const GmParams& p) {
    for (const auto& pair : pairs) {
      if (gm_score(pair.winner, p) > 0.0 || gm_score(pair.loser, p) > 0.0) return true;
    }
    return false;
  };
  bool informative = any_positive(params);

  const double inv_n = 1.0 / static_cast<double>(train.size());
  for (int epoch = 1; epoch <= cfg.max_epochs && cfg.learning_rate > 0.0; ++epoch) {
    std::array<double, 4> grad{};
    bool active = false;
    for (const auto& pair : train) {
      if (gm_hinge_loss(params, pair) <= 0.0) continue;
      active = true;
      auto gw = gm_subgradient(pair.winner, params);
      auto gl = gm_subgradient(pair.loser, params);
      for (std::size_t k = 0; k < 4; ++k) grad[k] += (gl[k] - gw[k]) * inv_n;
    }
    if (!active || grad == std::array<double, 4>{}) break;

    auto t = params.as_array();
    for (std::size_t k = 0; k < 4; ++k) t[k] -= cfg.learning_rate * grad[k];
    params = GmParams::from_array(t);
    project(params);
    informative = informative || any_positive(params);

    const double agreement = gm_pairwise_agreement(params, holdout);
    if (agreement > result.holdout_agreement) {
      result.holdout_agreement = agreement;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  if (!informative) {
    throw FitError("every pair scores GM 0 under all visited thresholds; nothing to fit");
  }
  return result;
}

json params_to_json(const GmParams& p) {
  return {{"t1", p.t1}, {"t2", p.t2}, {"t3", p.t3}, {"t4", p.t4}};
}

json triple_to_json(const MetricTriple& m) {
  return {{"acc", m.acc}, {"sim", m.sim}, {"pp", m.pp}, {"granularity", to_string(m.granularity)}};
}

MetricTriple triple_from_json(const json& j) {
  MetricTriple m{j.at("acc").get<double>(), j.at("sim").get<double>(), j.at("pp").get<double>(),
                 parse_granularity(j.value("granularity", std::string("sentence")))};
  m.validate();
  return m;
}

std::vector<PreferencePair> load_preference_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open preference pairs '" + path.string() + "'");
  std::vector<PreferencePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      PreferencePair pair{triple_from_json(obj.at("winner")), triple_from_json(obj.at("loser")),
                          obj.value("annotation_id", std::string())};
      if (pair.winner.granularity != pair.loser.granularity) {
        throw ValidationError("winner and loser have different granularities");
      }
      pairs.push_back(std::move(pair));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return pairs;
}

void save_preference_pairs(std::span<const PreferencePair> pairs,
                           const std::filesystem::path& path) {
  std::string out;
  for (const auto& pair : pairs) {
    json obj = {{"annotation_id", pair.annotation_id},
                {"winner", triple_to_json(pair.winner)},
                {"loser", triple_to_json(pair.loser)}};
    out += obj.dump() + "\n";
  }
  write_file_atomic(path, out);
}

MetricReport evaluate(const TransferSet& ts, const EvaluationSuite& suite, const GmParams& params) {
  params.validate();
  if (ts.records.empty()) throw ValidationError("cannot evaluate an empty transfer set");
  auto acc = acc_transfer_set(suite.classifier, ts);
  auto sim = sim_transfer_set(ts, suite.embeddings, suite.idf);

  std::vector<Sentence> transferred;
  transferred.reserve(ts.records.size());
  for (const auto& r : ts.records) transferred.push_back(r.transferred);
  auto pp = perplexity(suite.lm, transferred);

  MetricReport report;
  report.acc = acc.acc;
  report.sim = sim.sim;
  report.pp = pp.pp;
  report.gm = gm_score(report.triple(), params);
  report.params = params;
  report.records = ts.records.size();
  report.degenerate_count = sim.degenerate_count;
  report.total_tokens = pp.total_tokens;
  report.checkpoint_meta = ts.checkpoint_meta;
  report.fingerprints = suite.fingerprints;
  report.per_record.reserve(ts.records.size());
  for (std::size_t i = 0; i < ts.records.size(); ++i) {
    RecordScore r;
    r.id = ts.records[i].id;
    r.indicator = acc.per_record[i].indicator;
    r.predicted_label = acc.per_record[i].predicted_label;
    r.target_prob = acc.per_record[i].target_prob;
    r.cosine = sim.per_pair[i];
    r.degenerate = sim.degenerate[i];
    r.sentence_pp = pp.per_sentence_pp[i];
    r.sentence_gm = gm_score({r.target_prob, r.cosine, r.sentence_pp, Granularity::kSentence}, params);
    report.per_record.push_back(std::move(r));
  }
  return report;
}

json report_to_json(const MetricReport& report, bool include_per_record) {
  json doc = {{"format", "stylemetrics.report"},
              {"version", kReportFormatVersion},
              {"acc", report.acc},
              {"sim", report.sim},
              {"pp", report.pp},
              {"gm", report.gm},
              {"params", params_to_json(report.params)},
              {"records", report.records},
              {"degenerate_count", report.degenerate_count},
              {"total_tokens", report.total_tokens},
              {"suite",
               {{"classifier", report.fingerprints.classifier},
                {"language_model", report.fingerprints.language_model},
                {"embeddings", report.fingerprints.embeddings},
                {"idf", report.fingerprints.idf}}}};
  if (report.checkpoint_meta) {
    doc["checkpoint"] = {{"model_name", report.checkpoint_meta->model_name},
                         {"epoch", report.checkpoint_meta->epoch}};
  } else {
    doc["checkpoint"] = nullptr;
  }
  if (include_per_record) {
    json rows = json::array();
    for (const auto& r : report.per_record) {
      rows.push_back({{"id", r.id},
                      {"indicator", r.indicator},
                      {"predicted_label", r.predicted_label},
                      {"target_prob", r.target_prob},
                      {"cosine", r.cosine},
                      {"degenerate", r.degenerate},
                      {"sentence_pp", r.sentence_pp},
                      {"sentence_gm", r.sentence_gm}});
    }
    doc["per_record"] = std::move(rows);
  }
  return doc;
}

std::vector<std::string> check_report_schema(const json& doc) {
  std::vector<std::string> problems;
  auto need_number = [&](const json& obj, const char* key, double lo, double hi,
                         const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
      problems.push_back(where + key + ": missing or not a number");
      return;
    }
    const double v = it->get<double>();
    if (!(v >= lo && v <= hi)) problems.push_back(where + key + ": out of range");
  };
  auto need_string = [&](const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) problems.push_back(where + key + ": missing or not a string");
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();

  if (!doc.is_object()) return {"report must be a JSON object"};
  if (doc.value("format", "") != "stylemetrics.report") problems.push_back("format: expected stylemetrics.report");
  if (!doc.contains("version") || !doc["version"].is_number_integer()) problems.push_back("version: missing");
  need_number(doc, "acc", 0.0, 1.0, "");
  need_number(doc, "sim", -1.0, 1.0, "");
  need_number(doc, "pp", 1.0, kInf, "");
  need_number(doc, "gm", 0.0, kInf, "");
  need_number(doc, "records", 1.0, kInf, "");
  need_number(doc, "degenerate_count", 0.0, kInf, "");
  need_number(doc, "total_tokens", 1.0, kInf, "");
  if (!doc.contains("params") || !doc["params"].is_object()) {
    problems.push_back("params: missing");
  } else {
    for (const char* k : {"t1", "t2", "t3", "t4"}) need_number(doc["params"], k, -kInf, kInf, "params.");
  }
  if (!doc.contains("suite") || !doc["suite"].is_object()) {
    problems.push_back("suite: missing");
  } else {
    for (const char* k : {"classifier", "language_model", "embeddings", "idf"}) {
      need_string(doc["suite"], k, "suite.");
    }
  }
  if (!doc.contains("checkpoint")) {
    problems.push_back("checkpoint: missing (use null)");
  } else if (!doc["checkpoint"].is_null()) {
    need_string(doc["checkpoint"], "model_name", "checkpoint.");
    need_number(doc["checkpoint"], "epoch", -kInf, kInf, "checkpoint.");
  }
  if (doc.contains("per_record")) {
    const auto& rows = doc["per_record"];
    if (!rows.is_array()) {
      problems.push_back("per_record: not an array");
    } else {
      if (doc.contains("records") && doc["records"].is_number() &&
          rows.size() != doc["records"].get<std::size_t>()) {
        problems.push_back("per_record: length differs from records");
      }
      for (std::size_t i = 0; i < rows.size() && problems.size() < 50; ++i) {
        const std::string where = "per_record[" + std::to_string(i) + "].";
        const auto& r = rows[i];
        if (!r.is_object()) {
          problems.push_back(where + ": not an object");
          continue;
        }
        need_string(r, "id", where);
        need_number(r, "indicator", 0.0, 1.0, where);
        need_number(r, "predicted_label", 0.0, 1.0, where);
        need_number(r, "target_prob", 0.0, 1.0, where);
        need_number(r, "cosine", -1.0, 1.0, where);
        need_number(r, "sentence_pp", 1.0, kInf, where);
        need_number(r, "sentence_gm", 0.0, kInf, where);
        if (!r.contains("degenerate") || !r["degenerate"].is_boolean()) {
          problems.push_back(where + "degenerate: missing or not a boolean");
        }
      }
    }
  }
  if (problems.empty()) {
    const auto p = GmParams{doc["params"]["t1"].get<double>(), doc["params"]["t2"].get<double>(),
                            doc["params"]["t3"].get<double>(), doc["params"]["t4"].get<double>()};
    const MetricTriple m{doc["acc"].get<double>(), doc["sim"].get<double>(), doc["pp"].get<double>()};
    const double expected = gm_score(m, p);
    if (std::abs(expected - doc["gm"].get<double>()) > 1e-9 * std::max(1.0, expected)) {
      problems.push_back("gm: inconsistent with acc/sim/pp under params (expected " +
                         format_number(expected) + ")");
    }
  }
  return problems;
}

TrajectoryPoint select_checkpoint(std::span<const TrajectoryPoint> points) {
  if (points.empty()) throw ValidationError("cannot select from an empty trajectory");
  auto better = [](const TrajectoryPoint& a, const TrajectoryPoint& b) {
    if (a.gm != b.gm) return a.gm > b.gm;
    if (a.triple.sim != b.triple.sim) return a.triple.sim > b.triple.sim;
    if (a.triple.pp != b.triple.pp) return a.triple.pp < b.triple.pp;
    if (a.epoch != b.epoch) return a.epoch < b.epoch;
    return a.source_path < b.source_path;
  };
  const TrajectoryPoint* best = &points.front();
  for (const auto& p : points) {
    if (better(p, *best)) best = &p;
  }
  return *best;
}

std::string trajectory_csv(std::span<const TrajectoryPoint> points, const TrajectoryPoint* selected) {
  std::string out = "epoch,acc,sim,pp,gm,selected\n";
  for (const auto& p : points) {
    const bool is_selected = selected != nullptr && p.epoch == selected->epoch &&
                             p.source_path == selected->source_path;
    out += format_number(p.epoch) + "," + format_number(p.triple.acc) + "," +
           format_number(p.triple.sim) + "," + format_number(p.triple.pp) + "," +
           format_number(p.gm) + "," + (is_selected ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace stylemetrics
