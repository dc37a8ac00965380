// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Configuration layering for the CLI: built-in defaults, then the JSON config
// file's per-command section, then command-line flags (applied by the parser
// after these helpers ran).  A top-level "seed" key seeds every command that
// uses randomness unless its own section or flag overrides it.

#include <optional>
#include <string>

#include "perfpred/cli/commands.hpp"
#include "perfpred/io/jsonl.hpp"

namespace perfpred::cli {

template <typename T>
void maybe_get(const Json& section, const char* key, T& value) {
  if (section.is_object() && section.contains(key)) section.at(key).get_to(value);
}

template <typename T>
void maybe_get(const Json& section, const char* key, std::optional<T>& value) {
  if (section.is_object() && section.contains(key)) value = section.at(key).get<T>();
}

inline Json section(const Json& config, const char* name) {
  return config.is_object() && config.contains(name) ? config.at(name) : Json::object();
}

inline void apply_config(const Json& s, CorpusParams& p) {
  maybe_get(s, "n_functions", p.n_functions);
  maybe_get(s, "n_releases", p.n_releases);
  maybe_get(s, "changes_per_release", p.changes_per_release);
  maybe_get(s, "regression_rate", p.regression_rate);
  maybe_get(s, "interval", p.interval);
  maybe_get(s, "ticks_per_release", p.ticks_per_release);
  maybe_get(s, "batch_size", p.batch_size);
  maybe_get(s, "rate_noise_sigma", p.rate_noise_sigma);
  maybe_get(s, "flappy_sigma", p.flappy_sigma);
  maybe_get(s, "flappy_fraction", p.flappy_fraction);
  maybe_get(s, "phantom_fraction", p.phantom_fraction);
  maybe_get(s, "confuser_fraction", p.confuser_fraction);
  maybe_get(s, "label_threshold", p.label_threshold);
  maybe_get(s, "threshold_margin", p.threshold_margin);
  maybe_get(s, "n_eras", p.n_eras);
  maybe_get(s, "diff_context", p.diff_context);
  maybe_get(s, "seed", p.seed);
}

inline void apply_config(const Json& config, SynthOptions& o) {
  maybe_get(config, "seed", o.params.seed);  // top-level seed first
  const Json s = section(config, "synth");
  apply_config(s, o.params);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "force", o.force);
}

inline void apply_config(const Json& config, LabelOptions& o) {
  const Json s = section(config, "label");
  maybe_get(s, "corpus_dir", o.corpus_dir);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "threshold_t", o.labeler.threshold_t);
  maybe_get(s, "cv_max", o.labeler.cv_max);
  maybe_get(s, "min_samples", o.labeler.min_samples);
}

inline void apply_config(const Json& config, SplitOptions& o) {
  maybe_get(config, "seed", o.seed);
  const Json s = section(config, "split");
  maybe_get(s, "labels_dir", o.labels_dir);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "mode", o.mode);
  maybe_get(s, "cutoff_fraction", o.cutoff_fraction);
  maybe_get(s, "cutoff_timestamp", o.cutoff_timestamp);
  maybe_get(s, "test_fraction", o.test_fraction);
  maybe_get(s, "seed", o.seed);
}

inline void apply_config(const Json& config, FeaturizeOptions& o) {
  const Json s = section(config, "featurize");
  maybe_get(s, "corpus_dir", o.corpus_dir);
  maybe_get(s, "labels_dir", o.labels_dir);
  maybe_get(s, "split_dir", o.split_dir);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "mode", o.mode);
  maybe_get(s, "context", o.context);
  maybe_get(s, "k1", o.k1);
  maybe_get(s, "b", o.b);
}

inline void apply_config(const Json& config, TrainOptions& o) {
  maybe_get(config, "seed", o.forest.seed);
  maybe_get(config, "seed", o.boosting.seed);
  const Json s = section(config, "train");
  maybe_get(s, "features_dir", o.features_dir);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "model", o.model);
  maybe_get(s, "n_estimators", o.forest.n_estimators);
  maybe_get(s, "n_estimators", o.boosting.n_estimators);
  maybe_get(s, "min_samples_leaf", o.forest.min_samples_leaf);
  maybe_get(s, "min_samples_leaf", o.boosting.min_samples_leaf);
  maybe_get(s, "learning_rate", o.boosting.learning_rate);
  maybe_get(s, "max_depth", o.boosting.max_depth);
  maybe_get(s, "seed", o.forest.seed);
  maybe_get(s, "seed", o.boosting.seed);
}

inline void apply_config(const Json& config, EvalOptions& o) {
  const Json s = section(config, "eval");
  maybe_get(s, "features_dir", o.features_dir);
  maybe_get(s, "model_dir", o.model_dir);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "use", o.use);
  maybe_get(s, "threshold", o.threshold);
  maybe_get(s, "policy_path", o.policy_path);
}

inline void apply_config(const Json& config, TuneOptions& o) {
  const Json s = section(config, "tune");
  maybe_get(s, "features_dir", o.features_dir);
  maybe_get(s, "model_dir", o.model_dir);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "use", o.use);
  maybe_get(s, "target_recall", o.target_recall);
  maybe_get(s, "from", o.from);
  maybe_get(s, "to", o.to);
}

inline void apply_config(const Json& config, FilterOptions& o) {
  const Json s = section(config, "filter");
  maybe_get(s, "features_dir", o.features_dir);
  maybe_get(s, "model_dir", o.model_dir);
  maybe_get(s, "policy_path", o.policy_path);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "use", o.use);
  maybe_get(s, "from", o.from);
  maybe_get(s, "to", o.to);
}

inline void apply_config(const Json& config, ExplainOptions& o) {
  const Json s = section(config, "explain");
  maybe_get(s, "corpus_dir", o.corpus_dir);
  maybe_get(s, "features_dir", o.features_dir);
  maybe_get(s, "split_dir", o.split_dir);
  maybe_get(s, "model_dir", o.model_dir);
  maybe_get(s, "out_dir", o.out_dir);
  maybe_get(s, "threshold", o.threshold);
  maybe_get(s, "policy_path", o.policy_path);
  maybe_get(s, "max_edits", o.max_edits);
  maybe_get(s, "k_per_site", o.k_per_site);
  maybe_get(s, "limit", o.limit);
  maybe_get(s, "change_id", o.change_id);
}

/// The config file must be known before flag defaults are bound, so it is
/// located by a pre-scan of argv rather than by the argument parser.
inline std::string find_config_path(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

}  // namespace perfpred::cli
