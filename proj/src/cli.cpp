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

#include "stylemetrics/cli.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stylemetrics/aggregate.hpp"
#include "stylemetrics/classifier.hpp"
#include "stylemetrics/errors.hpp"
#include "stylemetrics/io.hpp"
#include "stylemetrics/language_model.hpp"
#include "stylemetrics/similarity.hpp"
#include "stylemetrics/text.hpp"
#include "stylemetrics/validation.hpp"

namespace stylemetrics::cli {
namespace {

using nlohmann::json;

// A failure attributed to one stage of a command.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

template <class F>
auto in_stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string num(double x) { return json(x).dump(); }

// Fills options that were not given on the command line from a flat JSON
// object whose keys are long flag names.
void apply_config(CLI::App* sub, const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path, 0, std::string("invalid JSON config: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(path, 0, "config must be a JSON object");
  for (const auto& [raw_key, value] : doc.items()) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") continue;
    auto* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw ValidationError(path + ": unknown config key '" + raw_key + "'");
    if (opt->count() > 0) continue;
    std::vector<std::string> inputs;
    auto to_input = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) inputs.push_back(to_input(v));
    } else {
      inputs.push_back(to_input(value));
    }
    opt->add_result(inputs);
    opt->run_callback();
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string(flag) + " is required");
}

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    in_stage("output", [&] { write_file_atomic(out_path, text); });
  }
}

// ---------------------------------------------------------------- training

struct CorpusArgs {
  std::string x0, x1;
  std::string label0 = "0", label1 = "1";
};

void add_corpus_flags(CLI::App* sub, CorpusArgs& a) {
  sub->add_option("--x0", a.x0, "Corpus of style 0, one sentence per line");
  sub->add_option("--x1", a.x1, "Corpus of style 1, one sentence per line");
  sub->add_option("--label0", a.label0, "Name of style 0")->capture_default_str();
  sub->add_option("--label1", a.label1, "Name of style 1")->capture_default_str();
}

std::pair<Corpus, Corpus> load_corpora(const CorpusArgs& a) {
  require(a.x0, "--x0");
  require(a.x1, "--x1");
  return in_stage("corpus", [&] {
    if (a.label0 == a.label1) throw ValidationError("--label0 and --label1 must differ");
    return std::make_pair(load_corpus(a.x0, {0, a.label0}), load_corpus(a.x1, {1, a.label1}));
  });
}

struct TrainClassifierArgs {
  CorpusArgs corpora;
  ClassifierConfig cfg;
  std::string out;
};

int cmd_train_classifier(const TrainClassifierArgs& a, std::ostream& out) {
  require(a.out, "--out");
  auto [x0, x1] = load_corpora(a.corpora);
  auto model = in_stage("training", [&] { return train_classifier(x0, x1, a.cfg); });
  in_stage("output", [&] { save_classifier(model, a.out); });
  out << "dev_accuracy " << num(model.train_meta().final_dev_accuracy) << " best_epoch "
      << model.train_meta().best_epoch << " features " << model.num_features() << "\n";
  return 0;
}

struct TrainLmArgs {
  CorpusArgs corpora;
  LmConfig cfg;
  std::string out;
};

int cmd_train_lm(const TrainLmArgs& a, std::ostream& out) {
  require(a.out, "--out");
  auto [x0, x1] = load_corpora(a.corpora);
  auto lm = in_stage("training", [&] { return train_lm(x0, x1, a.cfg); });
  in_stage("output", [&] { save_lm(lm, a.out); });
  std::vector<Sentence> all = x0.sentences;
  all.insert(all.end(), x1.sentences.begin(), x1.sentences.end());
  out << "train_pp " << num(perplexity(lm, all).pp) << " vocab_size " << lm.vocab().size()
      << "\n";
  return 0;
}

struct BuildIdfArgs {
  CorpusArgs corpora;
  std::string out;
};

int cmd_build_idf(const BuildIdfArgs& a, std::ostream& out) {
  require(a.out, "--out");
  auto [x0, x1] = load_corpora(a.corpora);
  auto idf = build_idf(x0, x1);
  in_stage("output", [&] { save_idf(idf, a.out); });
  out << "corpus_size " << idf.corpus_size() << " words " << idf.weights().size() << "\n";
  return 0;
}

// -------------------------------------------------------------- evaluation

struct SuiteArgs {
  std::string classifier, lm, embeddings, idf;
  std::size_t dim = 0;
  std::string params = "63,71,97,-37";
};

void add_suite_flags(CLI::App* sub, SuiteArgs& a) {
  sub->add_option("--classifier", a.classifier, "Style classifier model (JSON)");
  sub->add_option("--lm", a.lm, "Language model (JSON)");
  sub->add_option("--embeddings", a.embeddings, "Word embeddings (text format)");
  sub->add_option("--idf", a.idf, "idf table (JSON)");
  sub->add_option("--dim", a.dim, "Embedding dimension; 0 infers it from the file")
      ->capture_default_str();
  sub->add_option("--params", a.params, "GM thresholds t1,t2,t3,t4")->capture_default_str();
}

struct LoadedSuite {
  ClassifierModel classifier;
  NGramLM lm;
  EmbeddingTable embeddings;
  IdfTable idf;
  SuiteFingerprints fingerprints;

  EvaluationSuite view() const { return {classifier, lm, embeddings, idf, fingerprints}; }
};

LoadedSuite load_suite(const SuiteArgs& a) {
  require(a.classifier, "--classifier");
  require(a.lm, "--lm");
  require(a.embeddings, "--embeddings");
  require(a.idf, "--idf");
  auto classifier = in_stage("classifier", [&] { return load_classifier(a.classifier); });
  auto lm = in_stage("language-model", [&] { return load_lm(a.lm); });
  auto embeddings = in_stage("embeddings", [&] {
    const std::size_t dim = a.dim > 0 ? a.dim : detect_embedding_dim(a.embeddings);
    return load_embeddings(a.embeddings, dim);
  });
  auto idf = in_stage("idf", [&] { return load_idf(a.idf); });
  SuiteFingerprints fp{file_fingerprint(a.classifier), file_fingerprint(a.lm),
                       file_fingerprint(a.embeddings), file_fingerprint(a.idf)};
  return {std::move(classifier), std::move(lm), std::move(embeddings), std::move(idf),
          std::move(fp)};
}

struct EvalArgs {
  std::string transfer;
  SuiteArgs suite;
  std::string granularity = "sentence";
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  require(a.transfer, "--transfer");
  const auto params = in_stage("arguments", [&] { return GmParams::parse(a.suite.params); });
  const auto granularity = in_stage("arguments", [&] { return parse_granularity(a.granularity); });
  const auto suite = load_suite(a.suite);
  auto ts = in_stage("transfer-set", [&] { return load_transfer_set(a.transfer); });
  auto report = in_stage("scoring", [&] { return evaluate(ts, suite.view(), params); });
  json doc = report_to_json(report, granularity == Granularity::kSentence);
  emit(doc, a.out, out);
  if (!a.out.empty()) {
    out << "acc " << num(report.acc) << " sim " << num(report.sim) << " pp " << num(report.pp)
        << " gm " << num(report.gm) << "\n";
  }
  return 0;
}

struct SelectArgs {
  std::vector<std::string> transfers;
  std::vector<double> epochs;
  SuiteArgs suite;
  std::string out;
  std::string chosen;
};

int cmd_select(const SelectArgs& a, std::ostream& out) {
  if (a.transfers.empty()) throw ValidationError("--transfer is required");
  require(a.out, "--out");
  if (!a.epochs.empty() && a.epochs.size() != a.transfers.size()) {
    throw ValidationError("--epochs needs one value per --transfer");
  }
  const auto params = in_stage("arguments", [&] { return GmParams::parse(a.suite.params); });
  const auto suite = load_suite(a.suite);

  std::vector<TrajectoryPoint> points;
  for (std::size_t i = 0; i < a.transfers.size(); ++i) {
    auto ts = in_stage("transfer-set", [&] { return load_transfer_set(a.transfers[i]); });
    auto report = in_stage("scoring", [&] { return evaluate(ts, suite.view(), params); });
    double epoch = static_cast<double>(i + 1);
    if (!a.epochs.empty()) {
      epoch = a.epochs[i];
    } else if (ts.checkpoint_meta) {
      epoch = ts.checkpoint_meta->epoch;
    }
    points.push_back({epoch, report.triple(), report.gm, a.transfers[i]});
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& x, const auto& y) { return x.epoch < y.epoch; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].epoch == points[i - 1].epoch) {
      throw StageError("trajectory", "duplicate epoch " + num(points[i].epoch) + " ('" +
                                         points[i - 1].source_path + "' and '" +
                                         points[i].source_path + "')");
    }
  }
  const auto best = select_checkpoint(points);
  in_stage("output", [&] {
    write_file_atomic(a.out, trajectory_csv(points, &best));
    if (!a.chosen.empty()) {
      json doc = {{"epoch", best.epoch},
                  {"source_path", best.source_path},
                  {"acc", best.triple.acc},
                  {"sim", best.triple.sim},
                  {"pp", best.triple.pp},
                  {"gm", best.gm},
                  {"params", params_to_json(params)}};
      write_file_atomic(a.chosen, doc.dump(2) + "\n");
    }
  });
  out << "selected epoch " << num(best.epoch) << " gm " << num(best.gm) << " " << best.source_path
      << "\n";
  return 0;
}

// ------------------------------------------------------------- fitting etc.

struct FitGmArgs {
  std::string pairs;
  GmFitConfig cfg;
  std::string init;
  std::string out;
};

int cmd_fit_gm(const FitGmArgs& a, std::ostream& out) {
  require(a.pairs, "--pairs");
  auto cfg = a.cfg;
  if (!a.init.empty()) cfg.init = in_stage("arguments", [&] { return GmParams::parse(a.init); });
  auto pairs = in_stage("pairs", [&] { return load_preference_pairs(a.pairs); });
  auto fit = in_stage("fitting", [&] { return fit_gm_params(pairs, cfg); });
  json doc = {{"params", params_to_json(fit.params)},
              {"holdout_agreement", fit.holdout_agreement},
              {"initial", params_to_json(fit.initial)},
              {"best_epoch", fit.best_epoch},
              {"train_pairs", fit.train_pairs},
              {"holdout_pairs", fit.holdout_pairs}};
  emit(doc, a.out, out);
  if (!a.out.empty()) {
    out << "params " << num(fit.params.t1) << "," << num(fit.params.t2) << "," << num(fit.params.t3)
        << "," << num(fit.params.t4) << " holdout_agreement " << num(fit.holdout_agreement) << "\n";
  }
  return 0;
}

struct ValidateArgs {
  std::string report;
  std::string annotations;
  std::string pairs;
  std::string params = "63,71,97,-37";
  std::string out;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  const auto params = in_stage("arguments", [&] { return GmParams::parse(a.params); });
  if (a.annotations.empty() && a.pairs.empty()) {
    throw ValidationError("--annotations or --pairs is required");
  }

  std::map<std::string, json> records;
  if (!a.report.empty()) {
    in_stage("report", [&] {
      json doc = json::parse(read_file(a.report));
      auto problems = check_report_schema(doc);
      if (!problems.empty()) throw ValidationError(a.report + ": " + problems.front());
      if (!doc.contains("per_record")) {
        throw ValidationError(a.report + ": report has no per_record scores");
      }
      for (const auto& r : doc["per_record"]) records[r["id"].get<std::string>()] = r;
    });
  }
  auto record = [&](const std::string& id) -> const json& {
    auto it = records.find(id);
    if (it == records.end()) {
      throw StageError("annotations", "item '" + id + "' has no scored record (pass --report)");
    }
    return it->second;
  };
  auto sentence_triple = [](const json& r) {
    return MetricTriple{r["target_prob"].get<double>(), r["cosine"].get<double>(),
                        r["sentence_pp"].get<double>(), Granularity::kSentence};
  };

  std::vector<double> sim_machine, sim_human, flu_machine, flu_human;
  std::vector<int> style_machine, style_human;
  std::vector<PreferencePair> pairs;
  if (!a.annotations.empty()) {
    auto annotations = in_stage("annotations", [&] { return load_annotations(a.annotations); });
    for (const auto& ann : annotations) {
      switch (ann.kind) {
        case AnnotationKind::kStyleChoice:
          style_machine.push_back(record(ann.item_id)["predicted_label"].get<int>());
          style_human.push_back(ann.value);
          break;
        case AnnotationKind::kRating:
          if (ann.aspect == "similarity") {
            sim_machine.push_back(record(ann.item_id)["cosine"].get<double>());
            sim_human.push_back(ann.value);
          } else {
            flu_machine.push_back(-record(ann.item_id)["sentence_pp"].get<double>());
            flu_human.push_back(ann.value);
          }
          break;
        case AnnotationKind::kPairwisePreference:
          pairs.push_back({sentence_triple(record(ann.winner)), sentence_triple(record(ann.loser)),
                           ann.item_id});
          break;
      }
    }
  }
  if (!a.pairs.empty()) {
    auto more = in_stage("pairs", [&] { return load_preference_pairs(a.pairs); });
    pairs.insert(pairs.end(), more.begin(), more.end());
  }

  json doc = {{"params", params_to_json(params)}};
  in_stage("statistics", [&] {
    doc["sim_spearman"] = sim_machine.empty() ? json(nullptr) : json(spearman_rho(sim_machine, sim_human));
    doc["sim_ratings"] = sim_machine.size();
    doc["pp_spearman"] = flu_machine.empty() ? json(nullptr) : json(spearman_rho(flu_machine, flu_human));
    doc["fluency_ratings"] = flu_machine.size();
    doc["acc_match_rate"] = style_machine.empty() ? json(nullptr) : json(match_rate(style_machine, style_human));
    doc["style_choices"] = style_machine.size();
    doc["gm_pairwise_agreement"] = pairs.empty() ? json(nullptr) : json(gm_pairwise_agreement(params, pairs));
    doc["pairs"] = pairs.size();
  });
  emit(doc, a.out, out);
  if (!a.out.empty()) {
    out << "sim_spearman " << doc["sim_spearman"].dump() << " pp_spearman "
        << doc["pp_spearman"].dump() << " acc_match_rate " << doc["acc_match_rate"].dump()
        << " gm_pairwise_agreement " << doc["gm_pairwise_agreement"].dump() << "\n";
  }
  return 0;
}

struct BleuArgs {
  std::string candidates, references, out;
};

int cmd_bleu(const BleuArgs& a, std::ostream& out) {
  require(a.candidates, "--candidates");
  require(a.references, "--references");
  auto inputs = in_stage("inputs", [&] { return load_bleu_inputs(a.candidates, a.references); });
  auto score = in_stage("scoring", [&] { return bleu(inputs); });
  auto stats = bleu_stats(inputs);
  std::ostringstream line;
  line << "BLEU = " << std::fixed << std::setprecision(2) << score;
  out << line.str() << "\n";
  if (!a.out.empty()) {
    json precisions = json::array();
    for (std::size_t n = 0; n < 4; ++n) {
      precisions.push_back(stats.totals[n] == 0 ? 0.0
                                                : static_cast<double>(stats.matches[n]) /
                                                      static_cast<double>(stats.totals[n]));
    }
    json doc = {{"bleu", score},
                {"precisions", precisions},
                {"candidate_length", stats.candidate_length},
                {"reference_length", stats.reference_length}};
    in_stage("output", [&] { write_file_atomic(a.out, doc.dump(2) + "\n"); });
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised evaluation of textual style transfer"};
  app.name(args.empty() ? "stylemetrics" : args.front());
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::map<CLI::App*, std::string> config_paths;
  auto command = [&](const char* name, const char* desc) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_paths[sub], "JSON file of flag values");
    return sub;
  };

  TrainClassifierArgs tc;
  auto* tc_cmd = command("train-classifier", "Train the style classifier behind Acc");
  add_corpus_flags(tc_cmd, tc.corpora);
  tc_cmd->add_option("--l2", tc.cfg.l2)->capture_default_str();
  tc_cmd->add_option("--lr", tc.cfg.learning_rate)->capture_default_str();
  tc_cmd->add_option("--epochs", tc.cfg.max_epochs)->capture_default_str();
  tc_cmd->add_option("--batch-size", tc.cfg.batch_size)->capture_default_str();
  tc_cmd->add_option("--dev-fraction", tc.cfg.dev_fraction)->capture_default_str();
  tc_cmd->add_option("--seed", seed)->capture_default_str();
  tc_cmd->add_option("--out", tc.out, "Model output path");

  TrainLmArgs tl;
  auto* tl_cmd = command("train-lm", "Train the Kneser-Ney language model behind PP");
  add_corpus_flags(tl_cmd, tl.corpora);
  tl_cmd->add_option("--order", tl.cfg.order)->capture_default_str();
  tl_cmd->add_option("--min-count", tl.cfg.min_count)->capture_default_str();
  tl_cmd->add_option("--seed", seed)->capture_default_str();
  tl_cmd->add_option("--out", tl.out, "Model output path");

  BuildIdfArgs bi;
  auto* bi_cmd = command("build-idf", "Build the idf table over both corpora");
  add_corpus_flags(bi_cmd, bi.corpora);
  bi_cmd->add_option("--seed", seed)->capture_default_str();
  bi_cmd->add_option("--out", bi.out, "idf table output path");

  EvalArgs ev;
  auto* ev_cmd = command("eval", "Score a transfer set: Acc, Sim, PP and GM");
  ev_cmd->add_option("--transfer", ev.transfer, "Transfer set (JSON lines)");
  add_suite_flags(ev_cmd, ev.suite);
  ev_cmd->add_option("--granularity", ev.granularity, "sentence (with per-record scores) or corpus")
      ->capture_default_str();
  ev_cmd->add_option("--seed", seed)->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "Report path; stdout when omitted");

  FitGmArgs fg;
  auto* fg_cmd = command("fit-gm", "Fit GM thresholds to pairwise preferences");
  fg_cmd->add_option("--pairs", fg.pairs, "Preference pairs (JSON lines)");
  fg_cmd->add_option("--lr", fg.cfg.learning_rate)->capture_default_str();
  fg_cmd->add_option("--epochs", fg.cfg.max_epochs)->capture_default_str();
  fg_cmd->add_option("--holdout-fraction", fg.cfg.holdout_fraction)->capture_default_str();
  fg_cmd->add_option("--init", fg.init, "Starting thresholds t1,t2,t3,t4");
  fg_cmd->add_option("--seed", seed)->capture_default_str();
  fg_cmd->add_option("--out", fg.out, "Output path; stdout when omitted");

  SelectArgs se;
  auto* se_cmd = command("select", "Evaluate checkpoints and pick the best by GM");
  se_cmd->add_option("--transfer", se.transfers, "Transfer sets, one per checkpoint");
  se_cmd->add_option("--epochs", se.epochs, "Epoch of each transfer set");
  add_suite_flags(se_cmd, se.suite);
  se_cmd->add_option("--seed", seed)->capture_default_str();
  se_cmd->add_option("--out", se.out, "Trajectory CSV path");
  se_cmd->add_option("--chosen", se.chosen, "Selected checkpoint JSON path");

  ValidateArgs va;
  auto* va_cmd = command("validate", "Agreement statistics against human judgments");
  va_cmd->add_option("--report", va.report, "Report with per-record scores");
  va_cmd->add_option("--annotations", va.annotations, "Human annotations (JSON lines)");
  va_cmd->add_option("--pairs", va.pairs, "Preference pairs with metric triples (JSON lines)");
  va_cmd->add_option("--params", va.params, "GM thresholds t1,t2,t3,t4")->capture_default_str();
  va_cmd->add_option("--seed", seed)->capture_default_str();
  va_cmd->add_option("--out", va.out, "Output path; stdout when omitted");

  BleuArgs bl;
  auto* bl_cmd = command("bleu", "Corpus BLEU against aligned references");
  bl_cmd->add_option("--candidates", bl.candidates, "Candidate sentences, one per line");
  bl_cmd->add_option("--references", bl.references, "Reference sentences, one per line");
  bl_cmd->add_option("--seed", seed)->capture_default_str();
  bl_cmd->add_option("--out", bl.out, "Optional JSON with n-gram statistics");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    const auto& config = config_paths[sub];
    if (!config.empty()) in_stage("config", [&] { apply_config(sub, config); });
    tc.cfg.seed = seed;
    fg.cfg.seed = seed;
    if (name == "train-classifier") return cmd_train_classifier(tc, out);
    if (name == "train-lm") return cmd_train_lm(tl, out);
    if (name == "build-idf") return cmd_build_idf(bi, out);
    if (name == "eval") return cmd_eval(ev, out);
    if (name == "fit-gm") return cmd_fit_gm(fg, out);
    if (name == "select") return cmd_select(se, out);
    if (name == "validate") return cmd_validate(va, out);
    if (name == "bleu") return cmd_bleu(bl, out);
  } catch (const StageError& e) {
    err << app.get_name() << " " << name << ": " << e.stage() << " stage failed: " << one_line(e.what())
        << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << app.get_name() << " " << name << ": arguments stage failed: " << one_line(e.what())
        << "\n";
    return 1;
  }
  return 1;
}

}  // namespace stylemetrics::cli
