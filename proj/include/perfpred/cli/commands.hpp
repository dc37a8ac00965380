// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The pipeline commands behind the `perfpred` executable.  Each command reads
// persisted artifacts, writes its own artifacts plus a run manifest into its
// output directory, and returns a JSON summary for the caller to print.
// Commands hold no hidden state: any step can be re-run from disk.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "perfpred/bow.hpp"
#include "perfpred/corpus.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/explain.hpp"
#include "perfpred/io/artifacts.hpp"
#include "perfpred/io/manifest.hpp"
#include "perfpred/labeler.hpp"
#include "perfpred/metrics.hpp"
#include "perfpred/opaque.hpp"
#include "perfpred/trees.hpp"

namespace perfpred::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Shared artifact access.

inline std::vector<LabeledExample> read_labels(const std::string& labels_dir) {
  const std::string path = labels_dir + "/labels.jsonl";
  require_artifact(path, "label");
  std::vector<LabeledExample> out;
  for (const Json& j : read_jsonl(path)) out.push_back(labeled_example_from_json(j));
  return out;
}

inline std::vector<FeatureRow> read_feature_rows(const std::string& path) {
  std::vector<FeatureRow> out;
  for (const Json& j : read_jsonl(path)) out.push_back(feature_row_from_json(j));
  return out;
}

/// vectorizer.json (bow) or encoder.json (opaque), whichever the feature
/// directory contains.
inline Json read_featurize_meta(const std::string& features_dir) {
  if (fs::exists(features_dir + "/vectorizer.json"))
    return load_json(features_dir + "/vectorizer.json");
  if (fs::exists(features_dir + "/encoder.json"))
    return load_json(features_dir + "/encoder.json");
  throw DataError("missing artifact " + features_dir +
                  "/vectorizer.json (or encoder.json); run `perfpred featurize` first");
}

inline SparseMatrix rows_to_matrix(const std::vector<FeatureRow>& rows, std::size_t n_features) {
  std::vector<SparseVector> vectors;
  vectors.reserve(rows.size());
  for (const FeatureRow& r : rows) vectors.push_back(r.features);
  return SparseMatrix::from_rows(vectors, n_features);
}

inline std::vector<char> rows_to_targets(const std::vector<FeatureRow>& rows) {
  std::vector<char> y;
  y.reserve(rows.size());
  for (const FeatureRow& r : rows) y.push_back(r.label ? 1 : 0);
  return y;
}

struct LoadedModel {
  std::string kind;  // "bow-rf" | "bow-gb" | "opaque-rf" | "opaque-gb"
  std::string mode;  // "bow" | "opaque"
  std::size_t context = 1;
  std::size_t n_features = 0;
  std::optional<ForestModel> forest;
  std::optional<BoostedModel> boosted;
};

inline LoadedModel read_model(const std::string& model_dir) {
  const std::string path = model_dir + "/model.json";
  require_artifact(path, "train");
  const Json j = load_json(path);
  LoadedModel model;
  j.at("kind").get_to(model.kind);
  j.at("mode").get_to(model.mode);
  j.at("context").get_to(model.context);
  if (j.contains("forest")) {
    model.forest = forest_from_json(j.at("forest"));
    model.n_features = model.forest->n_features;
  } else if (j.contains("boosted")) {
    model.boosted = boosted_from_json(j.at("boosted"));
    model.n_features = model.boosted->n_features;
  } else {
    throw DataError(path + ": model carries neither a forest nor a boosted ensemble");
  }
  return model;
}

inline std::vector<double> model_scores(const LoadedModel& model, const SparseMatrix& x) {
  return model.forest ? predict_proba(*model.forest, x) : predict_proba(*model.boosted, x);
}

/// Scored set over feature rows, optionally restricted to release timestamps
/// in [from, to).
inline ScoredSet make_scored_set(const std::vector<FeatureRow>& rows,
                                 const std::vector<double>& scores,
                                 std::optional<double> from, std::optional<double> to) {
  ScoredSet s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double t = rows[i].release_timestamp;
    if (from && t < *from) continue;
    if (to && t >= *to) continue;
    s.push_back({scores[i], rows[i].label, static_cast<std::int64_t>(std::llround(t))});
  }
  return s;
}

inline std::optional<RenderedChange> render_record(const ChangeRecord& rec, std::size_t width) {
  return render_change(rec.diff, rec.index_before, rec.index_after, rec.function_name, width);
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  CorpusParams params;
  std::string out_dir = "corpus";
  bool force = false;
};

inline Json effective_config(const SynthOptions& o) {
  return Json{{"params", to_json(o.params)}, {"out_dir", o.out_dir}, {"force", o.force}};
}

inline Json cmd_synth(const SynthOptions& options) {
  if (fs::exists(options.out_dir) && !fs::is_empty(options.out_dir) && !options.force)
    throw ConfigError("output directory " + options.out_dir +
                      " already exists and is not empty; pass --force to overwrite");
  const Corpus corpus = generate_corpus(options.params);
  write_corpus(corpus, options.out_dir);

  std::size_t planted = 0;
  for (const ChangeRecord& rec : corpus.changes) planted += rec.planted ? 1 : 0;

  RunManifest manifest("synth", effective_config(options));
  for (const char* name : {"meta.json", "releases.jsonl", "changes.jsonl", "series.jsonl"})
    manifest.add_output(options.out_dir + "/" + name);
  manifest.write(options.out_dir);

  return Json{{"out_dir", options.out_dir},
              {"n_changes", corpus.changes.size()},
              {"n_releases", corpus.releases.size()},
              {"n_functions", corpus.series.size()},
              {"n_planted", planted},
              {"planted_rate", double(planted) / double(corpus.changes.size())},
              {"end_time", corpus.end_time}};
}

// ---------------------------------------------------------------------------
// label

struct LabelOptions {
  std::string corpus_dir = "corpus";
  std::string out_dir = "labels";
  LabelerConfig labeler;
};

inline Json effective_config(const LabelOptions& o) {
  return Json{{"corpus_dir", o.corpus_dir},
              {"out_dir", o.out_dir},
              {"threshold_t", o.labeler.threshold_t},
              {"cv_max", o.labeler.cv_max},
              {"min_samples", o.labeler.min_samples}};
}

inline Json cmd_label(const LabelOptions& options) {
  require_artifact(options.corpus_dir + "/meta.json", "synth");
  const Corpus corpus = read_corpus(options.corpus_dir);

  std::vector<ChangeEvent> events;
  events.reserve(corpus.changes.size());
  for (const ChangeRecord& rec : corpus.changes) {
    ChangeEvent event;
    event.change_id = rec.change_id;
    event.function_name = rec.function_name;
    event.release_timestamp = rec.release_timestamp;
    event.change = render_record(rec, 1);
    events.push_back(std::move(event));
  }

  const auto windows =
      stability_filter(build_windows(events, corpus.series, corpus.end_time), options.labeler);
  const auto examples = label_examples(windows, options.labeler);
  const auto [kept, removal] = remove_invalid(examples);

  fs::create_directories(options.out_dir);
  {
    JsonlWriter w(options.out_dir + "/labels.jsonl");
    for (const LabeledExample& ex : kept) w.write(to_json(ex));
    w.close();
  }
  std::size_t positives = 0;
  for (const LabeledExample& ex : kept) positives += ex.label ? 1 : 0;
  const Json report{{"n_windows", windows.size()},
                    {"n_kept", kept.size()},
                    {"n_positive", positives},
                    {"positive_fraction", positive_fraction(kept)},
                    {"dropped_empty_change", removal.dropped_empty_change},
                    {"dropped_absent_stats", removal.dropped_absent_stats}};
  save_json(options.out_dir + "/report.json", report);

  RunManifest manifest("label", effective_config(options));
  for (const char* name : {"meta.json", "changes.jsonl", "series.jsonl"})
    manifest.add_input(options.corpus_dir + "/" + name);
  manifest.add_output(options.out_dir + "/labels.jsonl");
  manifest.add_output(options.out_dir + "/report.json");
  manifest.write(options.out_dir);
  return report;
}

// ---------------------------------------------------------------------------
// split

struct SplitOptions {
  std::string labels_dir = "labels";
  std::string out_dir = "splits";
  std::string mode = "chronological";  // or "random" (experiments only)
  double cutoff_fraction = 5.0 / 6.0;  // of the corpus time span
  std::optional<double> cutoff_timestamp;
  double test_fraction = 1.0 / 6.0;  // random mode
  std::uint64_t seed = 42;           // random mode
};

inline Json effective_config(const SplitOptions& o) {
  Json j{{"labels_dir", o.labels_dir}, {"out_dir", o.out_dir},     {"mode", o.mode},
         {"cutoff_fraction", o.cutoff_fraction}, {"test_fraction", o.test_fraction},
         {"seed", o.seed}};
  if (o.cutoff_timestamp) j["cutoff_timestamp"] = *o.cutoff_timestamp;
  return j;
}

inline Json cmd_split(const SplitOptions& options) {
  const auto examples = read_labels(options.labels_dir);
  if (examples.empty()) throw DataError("split: no labeled examples in " + options.labels_dir);

  std::vector<LabeledExample> train, test;
  Json split{{"mode", options.mode}};
  std::string note;
  if (options.mode == "chronological") {
    double span_end = 0.0;
    for (const LabeledExample& ex : examples) span_end = std::max(span_end, ex.window.t_end);
    const double cutoff =
        options.cutoff_timestamp.value_or(options.cutoff_fraction * span_end);
    std::tie(train, test) = chronological_split(examples, cutoff);
    split["cutoff_timestamp"] = cutoff;
  } else if (options.mode == "random") {
    std::tie(train, test) = random_split(examples, options.test_fraction, options.seed);
    split["test_fraction"] = options.test_fraction;
    split["seed"] = options.seed;
    note = "random split ignores time and leaks temporally clustered regressions "
           "across train/test; for experiments only";
  } else {
    throw ConfigError("split: mode must be \"chronological\" or \"random\", got \"" +
                      options.mode + "\"");
  }

  auto ids_of = [](const std::vector<LabeledExample>& side) {
    std::vector<std::string> ids;
    ids.reserve(side.size());
    for (const LabeledExample& ex : side) ids.push_back(ex.window.change_id);
    return ids;
  };
  split["train_ids"] = ids_of(train);
  split["test_ids"] = ids_of(test);

  fs::create_directories(options.out_dir);
  save_json(options.out_dir + "/split.json", split);

  RunManifest manifest("split", effective_config(options));
  manifest.add_input(options.labels_dir + "/labels.jsonl");
  manifest.add_output(options.out_dir + "/split.json");
  manifest.write(options.out_dir);

  Json summary{{"mode", options.mode},
               {"n_train", train.size()},
               {"n_test", test.size()},
               {"train_positive_fraction", train.empty() ? 0.0 : positive_fraction(train)},
               {"test_positive_fraction", test.empty() ? 0.0 : positive_fraction(test)}};
  if (split.contains("cutoff_timestamp")) summary["cutoff_timestamp"] = split["cutoff_timestamp"];
  if (!note.empty()) summary["note"] = note;
  return summary;
}

// ---------------------------------------------------------------------------
// featurize

struct FeaturizeOptions {
  std::string corpus_dir = "corpus";
  std::string labels_dir = "labels";
  std::string split_dir = "splits";
  std::string out_dir = "features";
  std::string mode = "bow";  // or "opaque"
  std::size_t context = 1;   // rendered context width (bow only)
  double k1 = 1.2, b = 0.75;
};

inline Json effective_config(const FeaturizeOptions& o) {
  return Json{{"corpus_dir", o.corpus_dir}, {"labels_dir", o.labels_dir},
              {"split_dir", o.split_dir},   {"out_dir", o.out_dir},
              {"mode", o.mode},             {"context", o.context},
              {"k1", o.k1},                 {"b", o.b}};
}

inline Json cmd_featurize(const FeaturizeOptions& options) {
  if (options.mode != "bow" && options.mode != "opaque")
    throw ConfigError("featurize: mode must be \"bow\" or \"opaque\", got \"" + options.mode +
                      "\"");
  require_artifact(options.corpus_dir + "/changes.jsonl", "synth");
  require_artifact(options.split_dir + "/split.json", "split");
  const auto examples = read_labels(options.labels_dir);
  const Json split = load_json(options.split_dir + "/split.json");

  std::map<std::string, ChangeRecord> changes;
  for (const Json& j : read_jsonl(options.corpus_dir + "/changes.jsonl")) {
    ChangeRecord rec = change_record_from_json(j);
    std::string id = rec.change_id;
    changes.emplace(std::move(id), std::move(rec));
  }

  std::set<std::string> train_ids, test_ids;
  for (const Json& id : split.at("train_ids")) train_ids.insert(id.get<std::string>());
  for (const Json& id : split.at("test_ids")) test_ids.insert(id.get<std::string>());

  struct Item {
    const LabeledExample* example;
    const ChangeRecord* record;
    bool in_train;
  };
  std::vector<Item> items;
  items.reserve(examples.size());
  for (const LabeledExample& ex : examples) {
    const auto rec = changes.find(ex.window.change_id);
    if (rec == changes.end())
      throw DataError("featurize: change " + ex.window.change_id +
                      " is labeled but missing from the corpus; corpus and labels disagree");
    const bool in_train = train_ids.count(ex.window.change_id) > 0;
    if (!in_train && !test_ids.count(ex.window.change_id))
      throw DataError("featurize: change " + ex.window.change_id +
                      " is not covered by the split; re-run `perfpred split`");
    items.push_back({&ex, &rec->second, in_train});
  }

  fs::create_directories(options.out_dir);
  std::vector<SparseVector> vectors(items.size());
  std::size_t n_features = 0;

  if (options.mode == "bow") {
    std::vector<TokenMultiset> documents(items.size());
    std::vector<TokenMultiset> train_documents;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto rendered = render_record(*items[i].record, options.context);
      if (!rendered)
        throw DataError("featurize: change " + items[i].example->window.change_id +
                        " has no renderable edit for function " +
                        items[i].record->function_name);
      documents[i] = tokenize_change(*rendered);
      if (items[i].in_train) train_documents.push_back(documents[i]);
    }
    if (train_documents.empty()) throw DataError("featurize: train split is empty");
    const Vocabulary vocabulary = Vocabulary::build(train_documents);
    const Bm25Params bm25 = Bm25Params::fit(vocabulary, train_documents, options.k1, options.b);
    for (std::size_t i = 0; i < items.size(); ++i)
      vectors[i] = vectorize(vocabulary, bm25, documents[i]);
    n_features = vocabulary.size();
    Json meta = to_json_bow_vectorizer(vocabulary, bm25, options.context);
    meta["n_features"] = n_features;
    save_json(options.out_dir + "/vectorizer.json", meta);
  } else {
    std::vector<OpaqueRow> rows(items.size());
    std::vector<OpaqueRow> train_rows;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const ChangeRecord& rec = *items[i].record;
      const std::vector<UnifiedDiff> files{rec.diff};
      rows[i] = extract_opaque(files, rec.team, rec.tenure_class);
      if (items[i].in_train) train_rows.push_back(rows[i]);
    }
    if (train_rows.empty()) throw DataError("featurize: train split is empty");
    const OpaqueEncoder encoder = OpaqueEncoder::fit(train_rows);
    for (std::size_t i = 0; i < items.size(); ++i) vectors[i] = encoder.encode_row(rows[i]);
    n_features = encoder.n_columns();
    Json meta = to_json_opaque_encoder(encoder);
    meta["context"] = options.context;
    meta["n_features"] = n_features;
    save_json(options.out_dir + "/encoder.json", meta);
  }

  JsonlWriter train_out(options.out_dir + "/train.jsonl");
  JsonlWriter test_out(options.out_dir + "/test.jsonl");
  std::size_t n_train = 0, n_test = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    FeatureRow row;
    row.change_id = items[i].example->window.change_id;
    row.label = items[i].example->label;
    row.release_timestamp = items[i].example->release_timestamp;
    row.features = std::move(vectors[i]);
    if (items[i].in_train) {
      train_out.write(to_json(row));
      ++n_train;
    } else {
      test_out.write(to_json(row));
      ++n_test;
    }
  }
  train_out.close();
  test_out.close();

  RunManifest manifest("featurize", effective_config(options));
  manifest.add_input(options.corpus_dir + "/changes.jsonl");
  manifest.add_input(options.labels_dir + "/labels.jsonl");
  manifest.add_input(options.split_dir + "/split.json");
  manifest.add_output(options.out_dir +
                      (options.mode == "bow" ? "/vectorizer.json" : "/encoder.json"));
  manifest.add_output(options.out_dir + "/train.jsonl");
  manifest.add_output(options.out_dir + "/test.jsonl");
  manifest.write(options.out_dir);

  return Json{{"mode", options.mode},
              {"context", options.context},
              {"n_features", n_features},
              {"n_train", n_train},
              {"n_test", n_test}};
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string features_dir = "features";
  std::string out_dir = "models";
  std::string model = "bow-rf";  // {bow,opaque}-{rf,gb}
  RandomForestParams forest;
  GradientBoostingParams boosting;
};

inline Json effective_config(const TrainOptions& o) {
  Json j{{"features_dir", o.features_dir}, {"out_dir", o.out_dir}, {"model", o.model}};
  if (o.model.ends_with("-rf")) {
    j["n_estimators"] = o.forest.n_estimators;
    j["min_samples_leaf"] = o.forest.min_samples_leaf;
    j["seed"] = o.forest.seed;
  } else {
    j["n_estimators"] = o.boosting.n_estimators;
    j["learning_rate"] = o.boosting.learning_rate;
    j["max_depth"] = o.boosting.max_depth;
    j["min_samples_leaf"] = o.boosting.min_samples_leaf;
    j["seed"] = o.boosting.seed;
  }
  return j;
}

inline Json cmd_train(const TrainOptions& options) {
  const bool is_rf = options.model.ends_with("-rf");
  if (!is_rf && !options.model.ends_with("-gb"))
    throw ConfigError("train: model must be one of bow-rf, bow-gb, opaque-rf, opaque-gb");
  const std::string expected_mode = options.model.substr(0, options.model.find('-'));
  if (expected_mode != "bow" && expected_mode != "opaque")
    throw ConfigError("train: model must be one of bow-rf, bow-gb, opaque-rf, opaque-gb");

  require_artifact(options.features_dir + "/train.jsonl", "featurize");
  const Json meta = read_featurize_meta(options.features_dir);
  if (meta.at("mode").get<std::string>() != expected_mode)
    throw ConfigError("train: model " + options.model + " needs mode \"" + expected_mode +
                      "\" features, but " + options.features_dir + " holds mode \"" +
                      meta.at("mode").get<std::string>() + "\"; re-run `perfpred featurize`");

  const auto rows = read_feature_rows(options.features_dir + "/train.jsonl");
  if (rows.empty()) throw DataError("train: no training rows in " + options.features_dir);
  const std::size_t n_features = meta.at("n_features").get<std::size_t>();
  const SparseMatrix x = rows_to_matrix(rows, n_features);
  const std::vector<char> y = rows_to_targets(rows);

  Json model_json{{"kind", options.model},
                  {"mode", expected_mode},
                  {"context", meta.at("context")}};
  std::size_t n_trees = 0;
  if (is_rf) {
    const ForestModel model = train_random_forest(x, y, options.forest);
    model_json["forest"] = to_json(model);
    n_trees = model.trees.size();
  } else {
    const BoostedModel model = train_gradient_boosting(x, y, options.boosting);
    model_json["boosted"] = to_json(model);
    n_trees = model.trees.size();
  }

  fs::create_directories(options.out_dir);
  save_json(options.out_dir + "/model.json", model_json);

  RunManifest manifest("train", effective_config(options));
  manifest.add_input(options.features_dir + "/train.jsonl");
  manifest.add_output(options.out_dir + "/model.json");
  manifest.write(options.out_dir);

  std::size_t positives = 0;
  for (const char label : y) positives += label ? 1 : 0;
  return Json{{"model", options.model},
              {"n_rows", rows.size()},
              {"n_positive", positives},
              {"n_features", n_features},
              {"n_trees", n_trees}};
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string features_dir = "features";
  std::string model_dir = "models";
  std::string out_dir = "eval";
  std::string use = "test";  // which feature file to score
  double threshold = 0.5;
  std::optional<std::string> policy_path;  // overrides --threshold when given
};

inline Json effective_config(const EvalOptions& o) {
  Json j{{"features_dir", o.features_dir},
         {"model_dir", o.model_dir},
         {"out_dir", o.out_dir},
         {"use", o.use},
         {"threshold", o.threshold}};
  if (o.policy_path) j["policy_path"] = *o.policy_path;
  return j;
}

/// CSV rows over every distinct score: predict positive when score >= cut.
inline std::string curve_csv(const ScoredSet& s) {
  std::vector<std::size_t> order(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s[a].score > s[b].score; });
  double n_pos = 0, n_neg = 0;
  for (const ScoredExample& e : s) (e.label ? n_pos : n_neg) += 1.0;

  std::string csv = "score_cut,precision,recall,fpr,tpr\n";
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (s[order[i]].label ? tp : fp) += 1.0;
    const bool boundary =
        i + 1 == order.size() || s[order[i + 1]].score != s[order[i]].score;
    if (!boundary) continue;
    const double precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    const double recall = n_pos == 0 ? 0.0 : tp / n_pos;
    const double fpr = n_neg == 0 ? 0.0 : fp / n_neg;
    char line[160];
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", s[order[i]].score,
                  precision, recall, fpr, recall);
    csv += line;
  }
  return csv;
}

inline Json confusion_json(const ConfusionMatrix& m) {
  return Json{{"tp", m.tp},
              {"fp", m.fp},
              {"tn", m.tn},
              {"fn", m.fn},
              {"precision", m.precision()},
              {"recall", m.recall()},
              {"f1", m.f1()},
              {"negative_precision", m.negative_precision()},
              {"negative_recall", m.negative_recall()},
              {"negative_f1", m.negative_f1()}};
}

inline Json cmd_eval(const EvalOptions& options) {
  const LoadedModel model = read_model(options.model_dir);
  const std::string rows_path = options.features_dir + "/" + options.use + ".jsonl";
  require_artifact(rows_path, "featurize");
  const auto rows = read_feature_rows(rows_path);
  if (rows.empty()) throw DataError("eval: no rows in " + rows_path);

  const auto scores = model_scores(model, rows_to_matrix(rows, model.n_features));
  const ScoredSet scored = make_scored_set(rows, scores, std::nullopt, std::nullopt);

  double threshold = options.threshold;
  if (options.policy_path) {
    require_artifact(*options.policy_path, "tune");
    threshold = threshold_policy_from_json(load_json(*options.policy_path)).threshold;
  }

  double prior = 0.0;
  for (const ScoredExample& e : scored) prior += e.label ? 1.0 : 0.0;
  prior /= double(scored.size());

  const Json report{{"model", model.kind},
                    {"use", options.use},
                    {"n", scored.size()},
                    {"prior", prior},
                    {"roc_auc", roc_auc(scored)},
                    {"average_precision", average_precision(scored)},
                    {"threshold", threshold},
                    {"confusion", confusion_json(confusion_at(scored, threshold))}};

  fs::create_directories(options.out_dir);
  save_json(options.out_dir + "/report.json", report);
  write_text_file(options.out_dir + "/curves.csv", curve_csv(scored));

  RunManifest manifest("eval", effective_config(options));
  manifest.add_input(options.model_dir + "/model.json");
  manifest.add_input(rows_path);
  if (options.policy_path) manifest.add_input(*options.policy_path);
  manifest.add_output(options.out_dir + "/report.json");
  manifest.add_output(options.out_dir + "/curves.csv");
  manifest.write(options.out_dir);
  return report;
}

// ---------------------------------------------------------------------------
// tune

struct TuneOptions {
  std::string features_dir = "features";
  std::string model_dir = "models";
  std::string out_dir = "tune";
  std::string use = "train";  // tuning examples come from the train period
  double target_recall = 1.0;
  std::optional<double> from, to;  // restrict to release timestamps [from, to)
};

inline Json effective_config(const TuneOptions& o) {
  Json j{{"features_dir", o.features_dir},
         {"model_dir", o.model_dir},
         {"out_dir", o.out_dir},
         {"use", o.use},
         {"target_recall", o.target_recall}};
  if (o.from) j["from"] = *o.from;
  if (o.to) j["to"] = *o.to;
  return j;
}

inline Json cmd_tune(const TuneOptions& options) {
  const LoadedModel model = read_model(options.model_dir);
  const std::string rows_path = options.features_dir + "/" + options.use + ".jsonl";
  require_artifact(rows_path, "featurize");
  const auto rows = read_feature_rows(rows_path);

  const auto scores = model_scores(model, rows_to_matrix(rows, model.n_features));
  const ScoredSet tuning = make_scored_set(rows, scores, options.from, options.to);
  if (tuning.empty())
    throw DataError("tune: no examples in the requested tuning window");

  ThresholdPolicy policy;
  policy.mode = ThresholdMode::TargetRecall;
  policy.target = options.target_recall;
  policy = tune_threshold(tuning, policy);

  const ConfusionMatrix m = confusion_at(tuning, policy.threshold);
  const FilteringReport filt = filtering_report(tuning, policy.threshold);

  Json policy_json = to_json(policy);
  policy_json["tuned_on"] = Json{{"use", options.use},
                                 {"n", tuning.size()},
                                 {"positives", m.positives()},
                                 {"achieved_recall", m.recall()},
                                 {"fraction_filtered", filt.fraction_filtered}};
  if (options.from) policy_json["tuned_on"]["from"] = *options.from;
  if (options.to) policy_json["tuned_on"]["to"] = *options.to;

  fs::create_directories(options.out_dir);
  save_json(options.out_dir + "/policy.json", policy_json);

  RunManifest manifest("tune", effective_config(options));
  manifest.add_input(options.model_dir + "/model.json");
  manifest.add_input(rows_path);
  manifest.add_output(options.out_dir + "/policy.json");
  manifest.write(options.out_dir);

  return policy_json;
}

// ---------------------------------------------------------------------------
// filter

struct FilterOptions {
  std::string features_dir = "features";
  std::string model_dir = "models";
  std::string policy_path = "tune/policy.json";
  std::string out_dir = "filter";
  std::string use = "test";
  std::optional<double> from, to;
};

inline Json effective_config(const FilterOptions& o) {
  Json j{{"features_dir", o.features_dir},
         {"model_dir", o.model_dir},
         {"policy_path", o.policy_path},
         {"out_dir", o.out_dir},
         {"use", o.use}};
  if (o.from) j["from"] = *o.from;
  if (o.to) j["to"] = *o.to;
  return j;
}

inline Json cmd_filter(const FilterOptions& options) {
  const LoadedModel model = read_model(options.model_dir);
  require_artifact(options.policy_path, "tune");
  const ThresholdPolicy policy = threshold_policy_from_json(load_json(options.policy_path));
  const std::string rows_path = options.features_dir + "/" + options.use + ".jsonl";
  require_artifact(rows_path, "featurize");
  const auto rows = read_feature_rows(rows_path);

  const auto scores = model_scores(model, rows_to_matrix(rows, model.n_features));
  const ScoredSet scored = make_scored_set(rows, scores, options.from, options.to);
  if (scored.empty()) throw DataError("filter: no examples in the requested window");

  const FilteringReport r = filtering_report(scored, policy.threshold);
  Json report{{"threshold", policy.threshold},
              {"use", options.use},
              {"n_total", r.n_total},
              {"n_flagged", r.n_flagged},
              {"n_filtered", r.n_filtered},
              {"fraction_filtered", r.fraction_filtered},
              {"missed_regressions", r.missed_regressions},
              {"recall", r.recall},
              {"precision", r.precision},
              {"prior", r.prior},
              // precision / prior: how much denser regressions are in the
              // flagged set than in unfiltered submissions.
              {"efficiency_lift", r.efficiency_lift}};
  if (options.from) report["from"] = *options.from;
  if (options.to) report["to"] = *options.to;

  fs::create_directories(options.out_dir);
  save_json(options.out_dir + "/report.json", report);

  RunManifest manifest("filter", effective_config(options));
  manifest.add_input(options.model_dir + "/model.json");
  manifest.add_input(options.policy_path);
  manifest.add_input(rows_path);
  manifest.add_output(options.out_dir + "/report.json");
  manifest.write(options.out_dir);
  return report;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainOptions {
  std::string corpus_dir = "corpus";
  std::string features_dir = "features";
  std::string split_dir = "splits";
  std::string model_dir = "models";
  std::string out_dir = "explain";
  double threshold = 0.5;
  std::optional<std::string> policy_path;
  std::size_t max_edits = 4;
  std::size_t k_per_site = 5;
  std::size_t limit = 20;                // explain at most this many positives
  std::optional<std::string> change_id;  // explain one specific change instead
};

inline Json effective_config(const ExplainOptions& o) {
  Json j{{"corpus_dir", o.corpus_dir},   {"features_dir", o.features_dir},
         {"split_dir", o.split_dir},     {"model_dir", o.model_dir},
         {"out_dir", o.out_dir},         {"threshold", o.threshold},
         {"max_edits", o.max_edits},     {"k_per_site", o.k_per_site},
         {"limit", o.limit}};
  if (o.policy_path) j["policy_path"] = *o.policy_path;
  if (o.change_id) j["change_id"] = *o.change_id;
  return j;
}

inline Json to_json(const Substitution& s) {
  return Json{{"line", s.site.line},
              {"begin", s.site.begin},
              {"end", s.site.end},
              {"kind", s.site.kind == SiteKind::Call ? "call" : "import"},
              {"original", s.original},
              {"replacement", s.replacement}};
}

inline Json cmd_explain(const ExplainOptions& options) {
  const LoadedModel model = read_model(options.model_dir);
  if (model.mode != "bow")
    throw ConfigError("explain: counterfactuals need a bag-of-words model; " + model.kind +
                      " scores are opaque to token substitutions");
  require_artifact(options.features_dir + "/vectorizer.json", "featurize");
  const BowVectorizer vectorizer =
      bow_vectorizer_from_json(load_json(options.features_dir + "/vectorizer.json"));
  require_artifact(options.corpus_dir + "/changes.jsonl", "synth");
  require_artifact(options.split_dir + "/split.json", "split");

  const ChangeScorer scorer =
      model.forest ? make_bow_scorer(vectorizer.vocabulary, vectorizer.params, *model.forest)
                   : make_bow_scorer(vectorizer.vocabulary, vectorizer.params, *model.boosted);

  double threshold = options.threshold;
  if (options.policy_path) {
    require_artifact(*options.policy_path, "tune");
    threshold = threshold_policy_from_json(load_json(*options.policy_path)).threshold;
  }

  std::map<std::string, ChangeRecord> changes;
  for (const Json& j : read_jsonl(options.corpus_dir + "/changes.jsonl")) {
    ChangeRecord rec = change_record_from_json(j);
    std::string id = rec.change_id;
    changes.emplace(std::move(id), std::move(rec));
  }

  // Plausibility statistics come from train-period changes only.
  const Json split = load_json(options.split_dir + "/split.json");
  std::vector<RenderedChange> train_rendered;
  for (const Json& id : split.at("train_ids")) {
    const auto rec = changes.find(id.get<std::string>());
    if (rec == changes.end()) continue;
    if (auto rendered = render_record(rec->second, vectorizer.context_width))
      train_rendered.push_back(std::move(*rendered));
  }
  const auto generator = CorpusFrequencyGenerator::fit(train_rendered);

  // Candidates: one named change, or the flagged test-period changes in
  // descending score order.
  struct Target {
    std::string change_id;
    RenderedChange rendered;
    double score;
  };
  std::vector<Target> targets;
  auto render_target = [&](const std::string& id) {
    const auto rec = changes.find(id);
    if (rec == changes.end()) throw DataError("explain: unknown change id " + id);
    const auto rendered = render_record(rec->second, vectorizer.context_width);
    if (!rendered) throw DataError("explain: change " + id + " has no renderable edit");
    return *rendered;
  };
  if (options.change_id) {
    RenderedChange rendered = render_target(*options.change_id);
    const double score = scorer(rendered);
    targets.push_back({*options.change_id, std::move(rendered), score});
  } else {
    const std::string rows_path = options.features_dir + "/test.jsonl";
    require_artifact(rows_path, "featurize");
    for (const FeatureRow& row : read_feature_rows(rows_path)) {
      RenderedChange rendered = render_target(row.change_id);
      const double score = scorer(rendered);
      if (score > threshold) targets.push_back({row.change_id, std::move(rendered), score});
    }
    std::stable_sort(targets.begin(), targets.end(), [](const Target& a, const Target& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.change_id < b.change_id;
    });
    if (targets.size() > options.limit) targets.resize(options.limit);
  }

  ExplainConfig config;
  config.threshold = threshold;
  config.max_edits = options.max_edits;
  config.k_per_site = options.k_per_site;

  fs::create_directories(options.out_dir);
  JsonlWriter out(options.out_dir + "/counterfactuals.jsonl");
  std::size_t n_flipped = 0, total_edits = 0;
  for (const Target& target : targets) {
    const auto cf = greedy_search(scorer, generator, target.rendered, config);
    Json row{{"change_id", target.change_id},
             {"original_score", target.score},
             {"threshold", threshold},
             {"found", cf.has_value()}};
    if (cf) {
      ++n_flipped;
      total_edits += cf->substitutions.size();
      Json subs = Json::array();
      for (const Substitution& s : cf->substitutions) subs.push_back(to_json(s));
      row["flipped_score"] = cf->flipped_score;
      row["substitutions"] = subs;
      row["text"] = format_counterfactual(target.rendered, *cf);
    }
    out.write(row);
  }
  out.close();

  RunManifest manifest("explain", effective_config(options));
  manifest.add_input(options.model_dir + "/model.json");
  manifest.add_input(options.features_dir + "/vectorizer.json");
  manifest.add_input(options.corpus_dir + "/changes.jsonl");
  manifest.add_input(options.split_dir + "/split.json");
  manifest.add_output(options.out_dir + "/counterfactuals.jsonl");
  manifest.write(options.out_dir);

  return Json{{"n_explained", targets.size()},
              {"n_flipped", n_flipped},
              {"threshold", threshold},
              {"mean_edits", n_flipped == 0 ? 0.0 : double(total_edits) / double(n_flipped)}};
}

}  // namespace perfpred::cli
