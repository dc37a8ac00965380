// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0

// perfpred: predict performance regressions from code changes.
//
// A pipeline of restartable commands over on-disk artifacts:
//   synth -> label -> split -> featurize -> train -> eval / tune -> filter
// plus `explain` for counterfactual explanations of flagged changes.
// Each command writes a run manifest (config hash + input/output SHA-256),
// so identical config and seed reproduce byte-identical artifacts.

#include <cstdio>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "perfpred/cli/commands.hpp"
#include "perfpred/cli/config.hpp"
#include "perfpred/errors.hpp"

namespace {

using perfpred::Json;

void print_summary(const Json& summary) { std::cout << summary.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  using namespace perfpred;
  using namespace perfpred::cli;

  Json config = Json::object();
  try {
    const std::string config_path = find_config_path(argc, argv);
    if (!config_path.empty()) config = load_json(config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"perfpred: predict performance regressions from code changes"};
  app.require_subcommand(1);
  std::string config_path_for_help;
  app.add_option("--config", config_path_for_help,
                 "JSON config file with per-command sections; flags override it")
      ->configurable(false);

  std::function<Json()> run;

  // synth ---------------------------------------------------------------
  SynthOptions synth;
  apply_config(config, synth);
  std::size_t synth_total_changes = 0;
  {
    CLI::App* c = app.add_subcommand("synth", "Generate a synthetic ground-truth corpus");
    c->add_option("--out", synth.out_dir, "Corpus output directory");
    c->add_flag("--force", synth.force, "Overwrite a non-empty output directory");
    c->add_option("--functions", synth.params.n_functions, "Fleet size (distinct functions)");
    c->add_option("--releases", synth.params.n_releases, "Number of releases");
    c->add_option("--changes-per-release", synth.params.changes_per_release,
                  "Function changes landed per release");
    c->add_option("--changes", synth_total_changes,
                  "Total change count (must be a multiple of --releases)");
    c->add_option("--rate", synth.params.regression_rate,
                  "Fraction of changes that cause a regression");
    c->add_option("--seed", synth.params.seed, "Generator seed");
    c->callback([&] {
      run = [&] {
        if (synth_total_changes != 0) {
          if (synth_total_changes % synth.params.n_releases != 0)
            throw ConfigError("--changes must be a multiple of --releases");
          synth.params.changes_per_release = synth_total_changes / synth.params.n_releases;
        }
        return cmd_synth(synth);
      };
    });
  }

  // label ---------------------------------------------------------------
  LabelOptions label;
  apply_config(config, label);
  {
    CLI::App* c =
        app.add_subcommand("label", "Attribute fleet CPU windows to changes and label them");
    c->add_option("--corpus", label.corpus_dir, "Corpus directory (from synth)");
    c->add_option("--out", label.out_dir, "Labels output directory");
    c->add_option("--threshold", label.labeler.threshold_t,
                  "Relative gcpu delta that counts as a regression");
    c->add_option("--cv-max", label.labeler.cv_max,
                  "Maximum coefficient of variation before a window is dropped");
    c->add_option("--min-samples", label.labeler.min_samples,
                  "Minimum samples required in a window");
    c->callback([&] { run = [&] { return cmd_label(label); }; });
  }

  // split ---------------------------------------------------------------
  SplitOptions split;
  apply_config(config, split);
  {
    CLI::App* c = app.add_subcommand("split", "Split labeled examples into train/test");
    c->add_option("--labels", split.labels_dir, "Labels directory (from label)");
    c->add_option("--out", split.out_dir, "Split output directory");
    c->add_option("--mode", split.mode,
                  "chronological, or random (leaks temporal clusters; for experiments only)");
    c->add_option("--cutoff-fraction", split.cutoff_fraction,
                  "Chronological cutoff as a fraction of the corpus time span");
    c->add_option("--cutoff", split.cutoff_timestamp,
                  "Chronological cutoff as an absolute timestamp (overrides the fraction)");
    c->add_option("--test-fraction", split.test_fraction, "Test share for --mode random");
    c->add_option("--seed", split.seed, "Shuffle seed for --mode random");
    c->callback([&] { run = [&] { return cmd_split(split); }; });
  }

  // featurize -----------------------------------------------------------
  FeaturizeOptions featurize;
  apply_config(config, featurize);
  {
    CLI::App* c = app.add_subcommand("featurize", "Turn labeled changes into feature vectors");
    c->add_option("--corpus", featurize.corpus_dir, "Corpus directory (from synth)");
    c->add_option("--labels", featurize.labels_dir, "Labels directory (from label)");
    c->add_option("--split", featurize.split_dir, "Split directory (from split)");
    c->add_option("--out", featurize.out_dir, "Features output directory");
    c->add_option("--mode", featurize.mode, "bow (diff tokens) or opaque (change metadata)");
    c->add_option("--context", featurize.context,
                  "Unchanged context lines rendered around each edit (bow)");
    c->add_option("--k1", featurize.k1, "BM25 k1");
    c->add_option("--b", featurize.b, "BM25 b");
    c->callback([&] { run = [&] { return cmd_featurize(featurize); }; });
  }

  // train ---------------------------------------------------------------
  TrainOptions train;
  apply_config(config, train);
  {
    CLI::App* c = app.add_subcommand("train", "Train a classifier on the train split");
    c->add_option("--features", train.features_dir, "Features directory (from featurize)");
    c->add_option("--out", train.out_dir, "Model output directory");
    c->add_option("--model", train.model, "bow-rf, bow-gb, opaque-rf, or opaque-gb");
    CLI::Option* estimators =
        c->add_option("--estimators", train.forest.n_estimators, "Ensemble size");
    c->add_option("--learning-rate", train.boosting.learning_rate, "Boosting learning rate");
    c->add_option("--max-depth", train.boosting.max_depth, "Boosting tree depth");
    CLI::Option* min_leaf =
        c->add_option("--min-leaf", train.forest.min_samples_leaf, "Minimum samples per leaf");
    CLI::Option* seed = c->add_option("--seed", train.forest.seed, "Training seed");
    c->callback([&] {
      run = [&, estimators, min_leaf, seed] {
        // Shared flags drive whichever ensemble the model choice selects.
        if (estimators->count() > 0) train.boosting.n_estimators = train.forest.n_estimators;
        if (min_leaf->count() > 0) train.boosting.min_samples_leaf = train.forest.min_samples_leaf;
        if (seed->count() > 0) train.boosting.seed = train.forest.seed;
        return cmd_train(train);
      };
    });
  }

  // eval ----------------------------------------------------------------
  EvalOptions eval;
  apply_config(config, eval);
  {
    CLI::App* c = app.add_subcommand("eval", "Score a split and report AUC, AP, and confusion");
    c->add_option("--features", eval.features_dir, "Features directory (from featurize)");
    c->add_option("--model-dir", eval.model_dir, "Model directory (from train)");
    c->add_option("--out", eval.out_dir, "Evaluation output directory");
    c->add_option("--use", eval.use, "Which feature file to score (train or test)");
    c->add_option("--threshold", eval.threshold, "Decision threshold for the confusion matrix");
    c->add_option("--policy", eval.policy_path, "Threshold policy file (from tune)");
    c->callback([&] { run = [&] { return cmd_eval(eval); }; });
  }

  // tune ----------------------------------------------------------------
  TuneOptions tune;
  apply_config(config, tune);
  {
    CLI::App* c =
        app.add_subcommand("tune", "Choose a decision threshold for a target recall");
    c->add_option("--features", tune.features_dir, "Features directory (from featurize)");
    c->add_option("--model-dir", tune.model_dir, "Model directory (from train)");
    c->add_option("--out", tune.out_dir, "Policy output directory");
    c->add_option("--use", tune.use, "Which feature file supplies tuning examples");
    c->add_option("--target-recall", tune.target_recall, "Recall the threshold must achieve");
    c->add_option("--from", tune.from, "Tuning window start timestamp (inclusive)");
    c->add_option("--to", tune.to, "Tuning window end timestamp (exclusive)");
    c->callback([&] { run = [&] { return cmd_tune(tune); }; });
  }

  // filter --------------------------------------------------------------
  FilterOptions filter;
  apply_config(config, filter);
  {
    CLI::App* c = app.add_subcommand(
        "filter", "Report how many diffs a tuned threshold removes before downstream checks");
    c->add_option("--features", filter.features_dir, "Features directory (from featurize)");
    c->add_option("--model-dir", filter.model_dir, "Model directory (from train)");
    c->add_option("--policy", filter.policy_path, "Threshold policy file (from tune)");
    c->add_option("--out", filter.out_dir, "Report output directory");
    c->add_option("--use", filter.use, "Which feature file to filter (train or test)");
    c->add_option("--from", filter.from, "Window start timestamp (inclusive)");
    c->add_option("--to", filter.to, "Window end timestamp (exclusive)");
    c->callback([&] { run = [&] { return cmd_filter(filter); }; });
  }

  // explain -------------------------------------------------------------
  ExplainOptions explain;
  apply_config(config, explain);
  {
    CLI::App* c = app.add_subcommand(
        "explain", "Find minimal token substitutions that flip flagged predictions");
    c->add_option("--corpus", explain.corpus_dir, "Corpus directory (from synth)");
    c->add_option("--features", explain.features_dir, "Features directory (from featurize)");
    c->add_option("--split", explain.split_dir, "Split directory (from split)");
    c->add_option("--model-dir", explain.model_dir, "Model directory (from train)");
    c->add_option("--out", explain.out_dir, "Counterfactuals output directory");
    c->add_option("--threshold", explain.threshold, "Decision threshold");
    c->add_option("--policy", explain.policy_path, "Threshold policy file (from tune)");
    c->add_option("--max-edits", explain.max_edits, "Substitution budget per explanation");
    c->add_option("--k-per-site", explain.k_per_site, "Candidate replacements per site");
    c->add_option("--limit", explain.limit, "Explain at most this many flagged changes");
    c->add_option("--change-id", explain.change_id, "Explain one specific change");
    c->callback([&] { run = [&] { return cmd_explain(explain); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // normalize CLI11's parse-error codes to 1
  }

  try {
    print_summary(run());
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
