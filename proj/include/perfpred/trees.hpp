// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Tree-ensemble classifiers over sparse features: a class-weighted random
// forest and a Newton-step gradient-boosting machine, both with exact
// best-split search.  Absent matrix entries are exact zeros, not missing
// values, so the zero block takes part in every split scan.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "perfpred/errors.hpp"
#include "perfpred/rng.hpp"
#include "perfpred/sparse.hpp"

namespace perfpred {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf payload: probability (forest) or additive step (boosting)

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root, preorder layout

  bool operator==(const Tree&) const = default;

  double predict(std::span<const std::uint32_t> indices, std::span<const double> values) const {
    std::size_t at = 0;
    while (nodes[at].feature >= 0) {
      const auto f = static_cast<std::uint32_t>(nodes[at].feature);
      const auto it = std::lower_bound(indices.begin(), indices.end(), f);
      const double x = (it != indices.end() && *it == f)
                           ? values[static_cast<std::size_t>(it - indices.begin())]
                           : 0.0;
      at = static_cast<std::size_t>(x <= nodes[at].threshold ? nodes[at].left
                                                             : nodes[at].right);
    }
    return nodes[at].value;
  }
};

/// Preorder trace of a trained tree: internal nodes as (feature, threshold),
/// leaves as (-1, value).  Used by the exhaustive split-search oracle tests.
struct SplitRecord {
  std::int32_t feature = -1;
  double threshold = 0.0;

  bool operator==(const SplitRecord&) const = default;
};

struct TreeTrainConfig {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = consider every non-constant feature
};

namespace detail {

enum class Criterion { Gini, Mse };

// Per-group accumulators.  Gini: a = weighted negatives, b = weighted
// positives.  Mse: a = sum of weights, b = sum of weight*gradient,
// c = sum of weight*hessian.
struct Stats {
  double a = 0.0, b = 0.0, c = 0.0;
  std::size_t n = 0;

  void add(const Stats& o) {
    a += o.a;
    b += o.b;
    c += o.c;
    n += o.n;
  }
  void sub(const Stats& o) {
    a -= o.a;
    b -= o.b;
    c -= o.c;
    n -= o.n;
  }
};

template <Criterion K>
inline double node_score(const Stats& s) {
  if constexpr (K == Criterion::Gini) {
    const double w = s.a + s.b;
    if (w <= 0.0) return 0.0;
    const double pn = s.a / w;
    const double pp = s.b / w;
    return w * (1.0 - pp * pp - pn * pn);
  } else {
    return s.a <= 0.0 ? 0.0 : -(s.b * s.b) / s.a;
  }
}

template <Criterion K>
inline double leaf_value(const Stats& s) {
  if constexpr (K == Criterion::Gini) {
    const double w = s.a + s.b;
    return w <= 0.0 ? 0.0 : s.b / w;
  } else {
    return s.c <= 0.0 ? 0.0 : s.b / s.c;
  }
}

template <Criterion K>
inline bool is_pure([[maybe_unused]] const Stats& s) {
  if constexpr (K == Criterion::Gini)
    return s.a == 0.0 || s.b == 0.0;
  else
    return false;  // regression purity falls out of the zero-gain check
}

/// One reusable training context per tree sequence; scratch arrays are sized
/// by the feature count and recycled across nodes via epoch stamps.
template <Criterion K>
class TreeBuilder {
 public:
  TreeBuilder(const SparseMatrix& x, TreeTrainConfig config)
      : x_(x),
        config_(config),
        stamp_(x.cols(), 0),
        stamp2_(x.cols(), 0),
        reg_count_(x.cols(), 0),
        reg_first_(x.cols(), 0.0),
        reg_mixed_(x.cols(), 0),
        slot_(x.cols(), 0) {}

  // Per-row target state; Gini uses (row_stats = class-weighted one-hot),
  // Mse uses (w, w*g, w*h).
  void set_row_stats(std::vector<Stats> row_stats) { row_stats_ = std::move(row_stats); }

  Tree build(const std::vector<std::uint32_t>& sample_rows, Rng& rng,
             std::vector<double>* importance, std::vector<SplitRecord>* split_log) {
    rows_ = sample_rows;
    scratch_.resize(rows_.size());
    Tree tree;
    build_node(tree, 0, rows_.size(), 0, rng, importance, split_log);
    return tree;
  }

 private:
  struct BestSplit {
    double score = std::numeric_limits<double>::infinity();
    std::uint32_t feature = 0;
    double threshold = 0.0;
    bool found = false;
  };

  std::size_t build_node(Tree& tree, std::size_t lo, std::size_t hi, std::size_t depth, Rng& rng,
                         std::vector<double>* importance, std::vector<SplitRecord>* split_log) {
    Stats total;
    for (std::size_t i = lo; i < hi; ++i) total.add(row_stats_[rows_[i]]);

    const std::size_t slot = tree.nodes.size();
    tree.nodes.emplace_back();

    const bool depth_capped = config_.max_depth > 0 && depth >= config_.max_depth;
    BestSplit best;
    if (!depth_capped && !is_pure<K>(total) && total.n >= 2 * config_.min_samples_leaf)
      best = find_best_split(lo, hi, total, rng);

    if (!best.found) {
      tree.nodes[slot].value = leaf_value<K>(total);
      if (split_log) split_log->push_back({-1, tree.nodes[slot].value});
      return slot;
    }

    if (importance)
      (*importance)[best.feature] += std::max(0.0, node_score<K>(total) - best.score);
    if (split_log)
      split_log->push_back({static_cast<std::int32_t>(best.feature), best.threshold});

    const std::size_t mid = partition(lo, hi, best.feature, best.threshold);
    tree.nodes[slot].feature = static_cast<std::int32_t>(best.feature);
    tree.nodes[slot].threshold = best.threshold;
    const std::size_t left =
        build_node(tree, lo, mid, depth + 1, rng, importance, split_log);
    tree.nodes[slot].left = static_cast<std::int32_t>(left);
    const std::size_t right =
        build_node(tree, mid, hi, depth + 1, rng, importance, split_log);
    tree.nodes[slot].right = static_cast<std::int32_t>(right);
    return slot;
  }

  BestSplit find_best_split(std::size_t lo, std::size_t hi, const Stats& total, Rng& rng) {
    // Pass 1: which features are non-constant inside this node?
    ++epoch_;
    touched_.clear();
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t row = rows_[i];
      const auto idx = x_.row_indices(row);
      const auto val = x_.row_values(row);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::uint32_t f = idx[k];
        if (stamp_[f] != epoch_) {
          stamp_[f] = epoch_;
          reg_count_[f] = 0;
          reg_first_[f] = val[k];
          reg_mixed_[f] = 0;
          touched_.push_back(f);
        }
        ++reg_count_[f];
        if (val[k] != reg_first_[f]) reg_mixed_[f] = 1;
      }
    }
    const std::size_t node_n = hi - lo;
    candidates_.clear();
    for (const std::uint32_t f : touched_)
      if (reg_mixed_[f] || reg_count_[f] < node_n) candidates_.push_back(f);
    if (candidates_.empty()) return {};
    std::sort(candidates_.begin(), candidates_.end());

    // Uniform subset of the candidates when a feature budget is set.
    std::size_t k_features = candidates_.size();
    if (config_.max_features > 0 && config_.max_features < k_features) {
      k_features = config_.max_features;
      for (std::size_t i = 0; i < k_features; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates_.size() - i));
        std::swap(candidates_[i], candidates_[j]);
      }
      std::sort(candidates_.begin(), candidates_.begin() + static_cast<std::ptrdiff_t>(k_features));
    }

    // Pass 2: gather per-feature value groups for the evaluated subset.
    ++epoch2_;
    lists_.resize(std::max(lists_.size(), k_features));
    for (std::size_t s = 0; s < k_features; ++s) {
      const std::uint32_t f = candidates_[s];
      stamp2_[f] = epoch2_;
      slot_[f] = s;
      lists_[s].clear();
    }
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t row = rows_[i];
      const auto idx = x_.row_indices(row);
      const auto val = x_.row_values(row);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::uint32_t f = idx[k];
        if (stamp2_[f] == epoch2_) lists_[slot_[f]].push_back({val[k], row});
      }
    }

    // Zero-gain splits are allowed (children may still separate further down),
    // so the best split is simply the minimal child score over all candidates.
    BestSplit best;
    for (std::size_t s = 0; s < k_features; ++s) {
      const std::uint32_t f = candidates_[s];
      auto& entries = lists_[s];
      std::sort(entries.begin(), entries.end(),
                [](const Entry& a, const Entry& b) { return a.value < b.value; });
      scan_feature(f, entries, total, node_n, best);
    }
    return best;
  }

  struct Entry {
    double value;
    std::size_t row;
  };

  void scan_feature(std::uint32_t f, const std::vector<Entry>& entries, const Stats& total,
                    std::size_t node_n, BestSplit& best) {
    groups_.clear();
    Stats present;
    std::size_t i = 0;
    while (i < entries.size()) {
      const double v = entries[i].value;
      Stats g;
      while (i < entries.size() && entries[i].value == v) {
        g.add(row_stats_[entries[i].row]);
        ++i;
      }
      present.add(g);
      groups_.push_back({v, g});
    }
    if (entries.size() < node_n) {  // implied zero block
      Stats zero = total;
      zero.sub(present);
      const auto at = std::lower_bound(groups_.begin(), groups_.end(), 0.0,
                                       [](const Group& g, double v) { return g.value < v; });
      groups_.insert(at, {0.0, zero});
    }
    if (groups_.size() < 2) return;

    Stats left;
    Stats right = total;
    for (std::size_t g = 0; g + 1 < groups_.size(); ++g) {
      left.add(groups_[g].stats);
      right.sub(groups_[g].stats);
      if (left.n < config_.min_samples_leaf || right.n < config_.min_samples_leaf) continue;
      double thr = 0.5 * (groups_[g].value + groups_[g + 1].value);
      if (thr >= groups_[g + 1].value) thr = groups_[g].value;
      const double score = node_score<K>(left) + node_score<K>(right);
      if (score < best.score) {
        best.score = score;
        best.feature = f;
        best.threshold = thr;
        best.found = true;
      }
    }
  }

  // Stable partition of rows_[lo, hi): x <= threshold goes left.
  std::size_t partition(std::size_t lo, std::size_t hi, std::uint32_t feature, double threshold) {
    std::size_t n_left = 0, n_right = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t row = rows_[i];
      const auto idx = x_.row_indices(row);
      const auto val = x_.row_values(row);
      const auto it = std::lower_bound(idx.begin(), idx.end(), feature);
      const double x = (it != idx.end() && *it == feature)
                           ? val[static_cast<std::size_t>(it - idx.begin())]
                           : 0.0;
      if (x <= threshold)
        rows_[lo + n_left++] = row;
      else
        scratch_[n_right++] = row;
    }
    for (std::size_t i = 0; i < n_right; ++i) rows_[lo + n_left + i] = scratch_[i];
    return lo + n_left;
  }

  struct Group {
    double value;
    Stats stats;
  };

  const SparseMatrix& x_;
  TreeTrainConfig config_;
  std::vector<Stats> row_stats_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::uint64_t> stamp_;
  std::vector<std::uint64_t> stamp2_;
  std::vector<std::size_t> reg_count_;
  std::vector<double> reg_first_;
  std::vector<char> reg_mixed_;
  std::vector<std::size_t> slot_;
  std::vector<std::uint32_t> touched_;
  std::vector<std::uint32_t> candidates_;
  std::vector<std::vector<Entry>> lists_;
  std::vector<Group> groups_;
  std::uint64_t epoch_ = 0;
  std::uint64_t epoch2_ = 0;
};

inline void check_training_inputs(const SparseMatrix& x, const std::vector<char>& y) {
  if (x.rows() == 0 || x.cols() == 0) throw DataError("train: empty feature matrix");
  if (y.size() != x.rows()) throw DataError("train: label count does not match rows");
  std::size_t pos = 0;
  for (const char v : y) pos += v ? 1 : 0;
  if (pos == 0 || pos == y.size())
    throw DataError("train: both classes must be present in y");
}

inline std::pair<double, double> class_weights(const std::vector<char>& y, bool balanced) {
  if (!balanced) return {1.0, 1.0};
  std::size_t pos = 0;
  for (const char v : y) pos += v ? 1 : 0;
  const double n = static_cast<double>(y.size());
  return {n / (2.0 * static_cast<double>(pos)),
          n / (2.0 * static_cast<double>(y.size() - pos))};
}

inline std::vector<double> finalize_importance(std::vector<std::vector<double>> per_tree) {
  if (per_tree.empty()) return {};
  std::vector<double> mean(per_tree[0].size(), 0.0);
  for (auto& imp : per_tree) {
    double sum = 0.0;
    for (const double v : imp) sum += v;
    if (sum > 0.0)
      for (double& v : imp) v /= sum;
    for (std::size_t i = 0; i < imp.size(); ++i) mean[i] += imp[i];
  }
  double sum = 0.0;
  for (const double v : mean) sum += v;
  if (sum > 0.0)
    for (double& v : mean) v /= sum;
  return mean;
}

}  // namespace detail

struct RandomForestParams {
  std::size_t n_estimators = 1000;
  bool balanced_class_weights = true;
  bool bootstrap = true;
  std::size_t min_samples_leaf = 1;
  bool sqrt_features = true;  // per-node budget of floor(sqrt(d)) features
  std::uint64_t seed = 0;

  bool operator==(const RandomForestParams&) const = default;
};

struct ForestModel {
  RandomForestParams params;
  std::size_t n_features = 0;
  double w_pos = 1.0, w_neg = 1.0;
  std::vector<Tree> trees;
  std::vector<double> importance;

  bool operator==(const ForestModel&) const = default;
};

struct GradientBoostingParams {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 5;
  bool balanced_class_weights = true;
  std::uint64_t seed = 0;

  bool operator==(const GradientBoostingParams&) const = default;
};

struct BoostedModel {
  GradientBoostingParams params;
  std::size_t n_features = 0;
  double init_log_odds = 0.0;
  std::vector<Tree> trees;
  std::vector<double> importance;

  bool operator==(const BoostedModel&) const = default;
};

/// Trains one unbounded classification tree; exposed for the split-search
/// oracle tests.  Uses every non-constant feature unless capped.
inline Tree train_classification_tree(const SparseMatrix& x, const std::vector<char>& y,
                                      const TreeTrainConfig& config, std::uint64_t seed,
                                      double w_pos = 1.0, double w_neg = 1.0,
                                      std::vector<SplitRecord>* split_log = nullptr) {
  detail::check_training_inputs(x, y);
  detail::TreeBuilder<detail::Criterion::Gini> builder(x, config);
  std::vector<detail::Stats> row_stats(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (y[i])
      row_stats[i] = {0.0, w_pos, 0.0, 1};
    else
      row_stats[i] = {w_neg, 0.0, 0.0, 1};
  }
  builder.set_row_stats(std::move(row_stats));
  std::vector<std::uint32_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  return builder.build(rows, rng, nullptr, split_log);
}

inline ForestModel train_random_forest(const SparseMatrix& x, const std::vector<char>& y,
                                       RandomForestParams params = {}) {
  detail::check_training_inputs(x, y);
  if (params.n_estimators == 0) throw ConfigError("train_random_forest: n_estimators >= 1");
  ForestModel model;
  model.params = params;
  model.n_features = x.cols();
  std::tie(model.w_pos, model.w_neg) =
      detail::class_weights(y, params.balanced_class_weights);

  TreeTrainConfig config;
  config.min_samples_leaf = params.min_samples_leaf;
  config.max_features =
      params.sqrt_features
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(x.cols()))))
          : 0;

  detail::TreeBuilder<detail::Criterion::Gini> builder(x, config);
  std::vector<detail::Stats> row_stats(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (y[i])
      row_stats[i] = {0.0, model.w_pos, 0.0, 1};
    else
      row_stats[i] = {model.w_neg, 0.0, 0.0, 1};
  }
  builder.set_row_stats(std::move(row_stats));

  const Rng base(params.seed);
  std::vector<std::vector<double>> importances;
  importances.reserve(params.n_estimators);
  std::vector<std::uint32_t> rows(x.rows());
  model.trees.reserve(params.n_estimators);
  for (std::size_t t = 0; t < params.n_estimators; ++t) {
    Rng rng = base.fork(t);
    if (params.bootstrap) {
      for (auto& r : rows)
        r = static_cast<std::uint32_t>(rng.below(x.rows()));
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    }
    std::vector<double> importance(x.cols(), 0.0);
    model.trees.push_back(builder.build(rows, rng, &importance, nullptr));
    importances.push_back(std::move(importance));
  }
  model.importance = detail::finalize_importance(std::move(importances));
  return model;
}

inline BoostedModel train_gradient_boosting(const SparseMatrix& x, const std::vector<char>& y,
                                            GradientBoostingParams params = {}) {
  detail::check_training_inputs(x, y);
  if (params.n_estimators == 0) throw ConfigError("train_gradient_boosting: n_estimators >= 1");
  BoostedModel model;
  model.params = params;
  model.n_features = x.cols();
  const auto [w_pos, w_neg] = detail::class_weights(y, params.balanced_class_weights);

  std::vector<double> weight(x.rows());
  double wy = 0.0, w_total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    weight[i] = y[i] ? w_pos : w_neg;
    wy += y[i] ? weight[i] : 0.0;
    w_total += weight[i];
  }
  const double p0 = wy / w_total;
  model.init_log_odds = std::log(p0 / (1.0 - p0));

  TreeTrainConfig config;
  config.max_depth = params.max_depth;
  config.min_samples_leaf = params.min_samples_leaf;
  detail::TreeBuilder<detail::Criterion::Mse> builder(x, config);

  std::vector<double> margin(x.rows(), model.init_log_odds);
  std::vector<std::uint32_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
  const Rng base(params.seed);
  std::vector<std::vector<double>> importances;
  importances.reserve(params.n_estimators);
  model.trees.reserve(params.n_estimators);
  for (std::size_t t = 0; t < params.n_estimators; ++t) {
    std::vector<detail::Stats> row_stats(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-margin[i]));
      const double g = (y[i] ? 1.0 : 0.0) - p;
      row_stats[i] = {weight[i], weight[i] * g, weight[i] * p * (1.0 - p), 1};
    }
    builder.set_row_stats(std::move(row_stats));
    Rng rng = base.fork(t);
    std::vector<double> importance(x.cols(), 0.0);
    Tree tree = builder.build(rows, rng, &importance, nullptr);
    importances.push_back(std::move(importance));
    for (std::size_t i = 0; i < x.rows(); ++i)
      margin[i] += params.learning_rate * tree.predict(x.row_indices(i), x.row_values(i));
    model.trees.push_back(std::move(tree));
  }
  model.importance = detail::finalize_importance(std::move(importances));
  return model;
}

inline std::vector<double> predict_proba(const ForestModel& model, const SparseMatrix& x) {
  if (model.trees.empty()) throw DataError("predict_proba: model has no trees");
  if (x.cols() != model.n_features)
    throw DataError("predict_proba: feature count mismatch (" + std::to_string(x.cols()) +
                    " vs " + std::to_string(model.n_features) + ")");
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sum = 0.0;
    for (const Tree& t : model.trees) sum += t.predict(x.row_indices(i), x.row_values(i));
    out[i] = sum / static_cast<double>(model.trees.size());
  }
  return out;
}

inline std::vector<double> predict_proba(const BoostedModel& model, const SparseMatrix& x) {
  if (model.trees.empty()) throw DataError("predict_proba: model has no trees");
  if (x.cols() != model.n_features)
    throw DataError("predict_proba: feature count mismatch (" + std::to_string(x.cols()) +
                    " vs " + std::to_string(model.n_features) + ")");
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double margin = model.init_log_odds;
    for (const Tree& t : model.trees)
      margin += model.params.learning_rate * t.predict(x.row_indices(i), x.row_values(i));
    out[i] = 1.0 / (1.0 + std::exp(-margin));
  }
  return out;
}

/// Mean-impurity-decrease ranking; ties broken by column index.
template <typename Model>
inline std::vector<std::pair<std::uint32_t, double>> feature_importance(const Model& model) {
  std::vector<std::pair<std::uint32_t, double>> ranked;
  ranked.reserve(model.importance.size());
  for (std::size_t i = 0; i < model.importance.size(); ++i)
    ranked.emplace_back(static_cast<std::uint32_t>(i), model.importance[i]);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

}  // namespace perfpred
