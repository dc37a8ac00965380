// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON (de)serialization for every persisted artifact: corpus directories,
// labeled examples, split assignments, fitted vectorizers/encoders, tree
// ensembles, and threshold policies.  Schemas are documented in
// docs/schemas.md; field names here are the schema.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "perfpred/corpus.hpp"
#include "perfpred/diff.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/io/jsonl.hpp"
#include "perfpred/labeler.hpp"
#include "perfpred/metrics.hpp"
#include "perfpred/opaque.hpp"
#include "perfpred/trees.hpp"

namespace perfpred {

// ---------------------------------------------------------------------------
// Diffs and function indexes.

inline Json to_json(const LinePatch& line) {
  const char* kind = line.kind == LineKind::Added     ? "+"
                     : line.kind == LineKind::Removed ? "-"
                                                      : " ";
  return Json::array({kind, line.text});
}

inline LinePatch line_patch_from_json(const Json& j) {
  const std::string kind = j.at(0).get<std::string>();
  LinePatch line;
  line.kind = kind == "+" ? LineKind::Added : kind == "-" ? LineKind::Removed : LineKind::Context;
  line.text = j.at(1).get<std::string>();
  return line;
}

inline Json to_json(const Hunk& hunk) {
  Json lines = Json::array();
  for (const LinePatch& l : hunk.lines) lines.push_back(to_json(l));
  return Json{{"old_start", hunk.old_start}, {"new_start", hunk.new_start}, {"lines", lines}};
}

inline Hunk hunk_from_json(const Json& j) {
  Hunk hunk;
  hunk.old_start = j.at("old_start").get<std::size_t>();
  hunk.new_start = j.at("new_start").get<std::size_t>();
  for (const Json& l : j.at("lines")) hunk.lines.push_back(line_patch_from_json(l));
  return hunk;
}

inline Json to_json(const UnifiedDiff& diff) {
  Json hunks = Json::array();
  for (const Hunk& h : diff.hunks) hunks.push_back(to_json(h));
  return Json{{"file_path", diff.file_path}, {"hunks", hunks}};
}

inline UnifiedDiff unified_diff_from_json(const Json& j) {
  UnifiedDiff diff;
  diff.file_path = j.at("file_path").get<std::string>();
  for (const Json& h : j.at("hunks")) diff.hunks.push_back(hunk_from_json(h));
  return diff;
}

inline Json to_json(const FunctionIndexEntry& entry) {
  return Json{{"revision", entry.revision},
              {"file_path", entry.file_path},
              {"function_name", entry.function_name},
              {"start_line", entry.start_line},
              {"end_line", entry.end_line}};
}

inline FunctionIndexEntry index_entry_from_json(const Json& j) {
  FunctionIndexEntry entry;
  entry.revision = j.at("revision").get<std::string>();
  entry.file_path = j.at("file_path").get<std::string>();
  entry.function_name = j.at("function_name").get<std::string>();
  entry.start_line = j.at("start_line").get<std::size_t>();
  entry.end_line = j.at("end_line").get<std::size_t>();
  return entry;
}

// ---------------------------------------------------------------------------
// Corpus directory: meta.json, releases.jsonl, changes.jsonl, series.jsonl.
// The simulator's internal cost model is not persisted; regenerating a corpus
// only needs meta.json's params (generation is deterministic in the seed).

inline Json to_json(const CorpusParams& p) {
  return Json{{"n_functions", p.n_functions},
              {"n_releases", p.n_releases},
              {"changes_per_release", p.changes_per_release},
              {"regression_rate", p.regression_rate},
              {"interval", p.interval},
              {"ticks_per_release", p.ticks_per_release},
              {"batch_size", p.batch_size},
              {"rate_noise_sigma", p.rate_noise_sigma},
              {"flappy_sigma", p.flappy_sigma},
              {"flappy_fraction", p.flappy_fraction},
              {"phantom_fraction", p.phantom_fraction},
              {"confuser_fraction", p.confuser_fraction},
              {"label_threshold", p.label_threshold},
              {"threshold_margin", p.threshold_margin},
              {"n_eras", p.n_eras},
              {"diff_context", p.diff_context},
              {"seed", p.seed}};
}

inline CorpusParams corpus_params_from_json(const Json& j) {
  CorpusParams p;
  j.at("n_functions").get_to(p.n_functions);
  j.at("n_releases").get_to(p.n_releases);
  j.at("changes_per_release").get_to(p.changes_per_release);
  j.at("regression_rate").get_to(p.regression_rate);
  j.at("interval").get_to(p.interval);
  j.at("ticks_per_release").get_to(p.ticks_per_release);
  j.at("batch_size").get_to(p.batch_size);
  j.at("rate_noise_sigma").get_to(p.rate_noise_sigma);
  j.at("flappy_sigma").get_to(p.flappy_sigma);
  j.at("flappy_fraction").get_to(p.flappy_fraction);
  j.at("phantom_fraction").get_to(p.phantom_fraction);
  j.at("confuser_fraction").get_to(p.confuser_fraction);
  j.at("label_threshold").get_to(p.label_threshold);
  j.at("threshold_margin").get_to(p.threshold_margin);
  j.at("n_eras").get_to(p.n_eras);
  j.at("diff_context").get_to(p.diff_context);
  j.at("seed").get_to(p.seed);
  return p;
}

inline Json to_json(const ReleaseSpec& release) {
  Json effects = Json::array();
  for (const PlantedEffect& e : release.planted_effects)
    effects.push_back(Json{{"function_name", e.function_name}, {"factor", e.factor}});
  return Json{{"release_id", release.release_id},
              {"timestamp", release.timestamp},
              {"change_ids", release.change_ids},
              {"planted_effects", effects}};
}

inline ReleaseSpec release_from_json(const Json& j) {
  ReleaseSpec release;
  j.at("release_id").get_to(release.release_id);
  j.at("timestamp").get_to(release.timestamp);
  j.at("change_ids").get_to(release.change_ids);
  for (const Json& e : j.at("planted_effects")) {
    PlantedEffect effect;
    e.at("function_name").get_to(effect.function_name);
    e.at("factor").get_to(effect.factor);
    release.planted_effects.push_back(std::move(effect));
  }
  return release;
}

inline Json to_json(const ChangeRecord& rec) {
  Json before = Json::array(), after = Json::array();
  for (const FunctionIndexEntry& e : rec.index_before) before.push_back(to_json(e));
  for (const FunctionIndexEntry& e : rec.index_after) after.push_back(to_json(e));
  return Json{{"change_id", rec.change_id},
              {"release_id", rec.release_id},
              {"release_timestamp", rec.release_timestamp},
              {"function_name", rec.function_name},
              {"file_path", rec.file_path},
              {"team", rec.team},
              {"tenure_class", rec.tenure_class},
              {"diff", to_json(rec.diff)},
              {"index_before", before},
              {"index_after", after},
              {"planted", rec.planted},
              {"factor", rec.factor},
              {"edit_kind", rec.edit_kind}};
}

inline ChangeRecord change_record_from_json(const Json& j) {
  ChangeRecord rec;
  j.at("change_id").get_to(rec.change_id);
  j.at("release_id").get_to(rec.release_id);
  j.at("release_timestamp").get_to(rec.release_timestamp);
  j.at("function_name").get_to(rec.function_name);
  j.at("file_path").get_to(rec.file_path);
  j.at("team").get_to(rec.team);
  j.at("tenure_class").get_to(rec.tenure_class);
  rec.diff = unified_diff_from_json(j.at("diff"));
  for (const Json& e : j.at("index_before")) rec.index_before.push_back(index_entry_from_json(e));
  for (const Json& e : j.at("index_after")) rec.index_after.push_back(index_entry_from_json(e));
  j.at("planted").get_to(rec.planted);
  j.at("factor").get_to(rec.factor);
  j.at("edit_kind").get_to(rec.edit_kind);
  return rec;
}

inline Json to_json(const GcpuSeries& series) {
  Json samples = Json::array();
  for (const auto& [t, gcpu] : series.samples) samples.push_back(Json::array({t, gcpu}));
  return Json{{"function_name", series.function_name}, {"samples", samples}};
}

inline GcpuSeries series_from_json(const Json& j) {
  GcpuSeries series;
  j.at("function_name").get_to(series.function_name);
  for (const Json& s : j.at("samples"))
    series.samples.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
  return series;
}

/// Writes meta.json, releases.jsonl, changes.jsonl, series.jsonl into dir.
inline void write_corpus(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Json meta{{"params", to_json(corpus.params)},
            {"end_time", corpus.end_time},
            {"n_changes", corpus.changes.size()},
            {"n_releases", corpus.releases.size()},
            {"n_series", corpus.series.size()}};
  save_json(dir + "/meta.json", meta);
  {
    JsonlWriter w(dir + "/releases.jsonl");
    for (const ReleaseSpec& r : corpus.releases) w.write(to_json(r));
    w.close();
  }
  {
    JsonlWriter w(dir + "/changes.jsonl");
    for (const ChangeRecord& c : corpus.changes) w.write(to_json(c));
    w.close();
  }
  {
    JsonlWriter w(dir + "/series.jsonl");
    for (const auto& [name, series] : corpus.series) w.write(to_json(series));
    w.close();
  }
}

/// Reads a corpus directory back; the in-memory cost model is not restored
/// (it is a simulator internal, not needed by any downstream command).
inline Corpus read_corpus(const std::string& dir) {
  Corpus corpus;
  const Json meta = load_json(dir + "/meta.json");
  corpus.params = corpus_params_from_json(meta.at("params"));
  meta.at("end_time").get_to(corpus.end_time);
  for (const Json& j : read_jsonl(dir + "/releases.jsonl"))
    corpus.releases.push_back(release_from_json(j));
  for (const Json& j : read_jsonl(dir + "/changes.jsonl"))
    corpus.changes.push_back(change_record_from_json(j));
  for (const Json& j : read_jsonl(dir + "/series.jsonl")) {
    GcpuSeries series = series_from_json(j);
    std::string name = series.function_name;
    corpus.series.emplace(std::move(name), std::move(series));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Labeled examples (one flat JSONL row per example; the rendered change is
// not persisted — featurize re-renders from the corpus at its own width).

inline Json to_json(const LabeledExample& example) {
  const FunctionWindow& w = example.window;
  return Json{{"change_id", w.change_id},
              {"function_name", w.function_name},
              {"release_timestamp", example.release_timestamp},
              {"t_start", w.t_start},
              {"t_end", w.t_end},
              {"gcpu_before", w.gcpu_before},
              {"gcpu_after", w.gcpu_after},
              {"delta_gcpu", w.delta_gcpu},
              {"cv", w.cv},
              {"n_samples", w.n_samples},
              {"stats_valid", w.stats_valid},
              {"label", example.label}};
}

inline LabeledExample labeled_example_from_json(const Json& j) {
  LabeledExample example;
  FunctionWindow& w = example.window;
  j.at("change_id").get_to(w.change_id);
  j.at("function_name").get_to(w.function_name);
  j.at("release_timestamp").get_to(example.release_timestamp);
  j.at("t_start").get_to(w.t_start);
  j.at("t_end").get_to(w.t_end);
  j.at("gcpu_before").get_to(w.gcpu_before);
  j.at("gcpu_after").get_to(w.gcpu_after);
  j.at("delta_gcpu").get_to(w.delta_gcpu);
  j.at("cv").get_to(w.cv);
  j.at("n_samples").get_to(w.n_samples);
  j.at("stats_valid").get_to(w.stats_valid);
  j.at("label").get_to(example.label);
  return example;
}

// ---------------------------------------------------------------------------
// Fitted vectorizers / encoders.  Both files carry the featurize mode and
// context width so train/eval can validate compatibility.

inline Json to_json_bow_vectorizer(const Vocabulary& vocabulary, const Bm25Params& params,
                                   std::size_t context_width) {
  return Json{{"mode", "bow"},
              {"context", context_width},
              {"k1", params.k1},
              {"b", params.b},
              {"avgdl", params.avgdl},
              {"n_documents", params.n_documents},
              {"tokens", vocabulary.tokens()},
              {"idf", params.idf}};
}

struct BowVectorizer {
  Vocabulary vocabulary;
  Bm25Params params;
  std::size_t context_width = 1;
};

inline BowVectorizer bow_vectorizer_from_json(const Json& j) {
  BowVectorizer v;
  v.vocabulary = Vocabulary::from_tokens(j.at("tokens").get<std::vector<std::string>>());
  j.at("k1").get_to(v.params.k1);
  j.at("b").get_to(v.params.b);
  j.at("avgdl").get_to(v.params.avgdl);
  j.at("n_documents").get_to(v.params.n_documents);
  j.at("idf").get_to(v.params.idf);
  j.at("context").get_to(v.context_width);
  if (v.params.idf.size() != v.vocabulary.size())
    throw DataError("bow vectorizer: idf length does not match vocabulary size");
  return v;
}

inline Json to_json_opaque_encoder(const OpaqueEncoder& encoder) {
  return Json{{"mode", "opaque"},
              {"min_count", encoder.min_count()},
              {"teams", encoder.teams()},
              {"base_paths", encoder.base_paths()},
              {"extensions", encoder.extensions()}};
}

inline OpaqueEncoder opaque_encoder_from_json(const Json& j) {
  return OpaqueEncoder::from_vocabularies(j.at("min_count").get<std::size_t>(),
                                          j.at("teams").get<std::vector<std::string>>(),
                                          j.at("base_paths").get<std::vector<std::string>>(),
                                          j.at("extensions").get<std::vector<std::string>>());
}

// ---------------------------------------------------------------------------
// Feature rows: {id, label, t, indices, values} per example.

struct FeatureRow {
  std::string change_id;
  bool label = false;
  double release_timestamp = 0.0;
  SparseVector features;
};

inline Json to_json(const FeatureRow& row) {
  return Json{{"change_id", row.change_id},
              {"label", row.label},
              {"release_timestamp", row.release_timestamp},
              {"indices", row.features.indices},
              {"values", row.features.values}};
}

inline FeatureRow feature_row_from_json(const Json& j) {
  FeatureRow row;
  j.at("change_id").get_to(row.change_id);
  j.at("label").get_to(row.label);
  j.at("release_timestamp").get_to(row.release_timestamp);
  j.at("indices").get_to(row.features.indices);
  j.at("values").get_to(row.features.values);
  if (row.features.indices.size() != row.features.values.size())
    throw DataError("feature row: indices/values length mismatch");
  return row;
}

// ---------------------------------------------------------------------------
// Tree ensembles.  Nodes serialize as [feature, threshold, left, right,
// value] quintuples; feature -1 marks a leaf.

inline Json to_json(const Tree& tree) {
  Json nodes = Json::array();
  for (const TreeNode& n : tree.nodes)
    nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.value}));
  return nodes;
}

inline Tree tree_from_json(const Json& j) {
  Tree tree;
  for (const Json& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<std::int32_t>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<std::int32_t>();
    node.right = n.at(3).get<std::int32_t>();
    node.value = n.at(4).get<double>();
    tree.nodes.push_back(node);
  }
  return tree;
}

inline Json to_json(const ForestModel& model) {
  Json trees = Json::array();
  for (const Tree& t : model.trees) trees.push_back(to_json(t));
  return Json{{"n_estimators", model.params.n_estimators},
              {"balanced_class_weights", model.params.balanced_class_weights},
              {"bootstrap", model.params.bootstrap},
              {"min_samples_leaf", model.params.min_samples_leaf},
              {"sqrt_features", model.params.sqrt_features},
              {"seed", model.params.seed},
              {"n_features", model.n_features},
              {"w_pos", model.w_pos},
              {"w_neg", model.w_neg},
              {"trees", trees},
              {"importance", model.importance}};
}

inline ForestModel forest_from_json(const Json& j) {
  ForestModel model;
  j.at("n_estimators").get_to(model.params.n_estimators);
  j.at("balanced_class_weights").get_to(model.params.balanced_class_weights);
  j.at("bootstrap").get_to(model.params.bootstrap);
  j.at("min_samples_leaf").get_to(model.params.min_samples_leaf);
  j.at("sqrt_features").get_to(model.params.sqrt_features);
  j.at("seed").get_to(model.params.seed);
  j.at("n_features").get_to(model.n_features);
  j.at("w_pos").get_to(model.w_pos);
  j.at("w_neg").get_to(model.w_neg);
  for (const Json& t : j.at("trees")) model.trees.push_back(tree_from_json(t));
  j.at("importance").get_to(model.importance);
  return model;
}

inline Json to_json(const BoostedModel& model) {
  Json trees = Json::array();
  for (const Tree& t : model.trees) trees.push_back(to_json(t));
  return Json{{"n_estimators", model.params.n_estimators},
              {"learning_rate", model.params.learning_rate},
              {"max_depth", model.params.max_depth},
              {"min_samples_leaf", model.params.min_samples_leaf},
              {"balanced_class_weights", model.params.balanced_class_weights},
              {"seed", model.params.seed},
              {"n_features", model.n_features},
              {"init_log_odds", model.init_log_odds},
              {"trees", trees},
              {"importance", model.importance}};
}

inline BoostedModel boosted_from_json(const Json& j) {
  BoostedModel model;
  j.at("n_estimators").get_to(model.params.n_estimators);
  j.at("learning_rate").get_to(model.params.learning_rate);
  j.at("max_depth").get_to(model.params.max_depth);
  j.at("min_samples_leaf").get_to(model.params.min_samples_leaf);
  j.at("balanced_class_weights").get_to(model.params.balanced_class_weights);
  j.at("seed").get_to(model.params.seed);
  j.at("n_features").get_to(model.n_features);
  j.at("init_log_odds").get_to(model.init_log_odds);
  for (const Json& t : j.at("trees")) model.trees.push_back(tree_from_json(t));
  j.at("importance").get_to(model.importance);
  return model;
}

// ---------------------------------------------------------------------------
// Threshold policies.

inline Json to_json(const ThresholdPolicy& policy) {
  const char* mode = policy.mode == ThresholdMode::TargetRecall      ? "target_recall"
                     : policy.mode == ThresholdMode::TargetPrecision ? "target_precision"
                                                                     : "fixed";
  return Json{{"mode", mode}, {"target", policy.target}, {"threshold", policy.threshold}};
}

inline ThresholdPolicy threshold_policy_from_json(const Json& j) {
  ThresholdPolicy policy;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "target_recall")
    policy.mode = ThresholdMode::TargetRecall;
  else if (mode == "target_precision")
    policy.mode = ThresholdMode::TargetPrecision;
  else if (mode == "fixed")
    policy.mode = ThresholdMode::Fixed;
  else
    throw DataError("threshold policy: unknown mode \"" + mode + "\"");
  j.at("target").get_to(policy.target);
  j.at("threshold").get_to(policy.threshold);
  return policy;
}

}  // namespace perfpred
