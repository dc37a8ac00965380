// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Joins release timelines, per-function changes, and sampled GCPU series into
// labeled examples: one window per change stretching until the next change of
// the same function, a coefficient-of-variation stability filter, strict
// threshold binarization, and invalid-record removal with drop accounting.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perfpred/diff.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/fleetsim.hpp"
#include "perfpred/rng.hpp"

namespace perfpred {

/// One function touched at one release; `change` is the function-scoped
/// rendering of the diff (absent when the diff carried nothing renderable).
struct ChangeEvent {
  std::string change_id;
  std::string function_name;
  double release_timestamp = 0.0;
  std::optional<RenderedChange> change;

  bool operator==(const ChangeEvent&) const = default;
};

struct FunctionWindow {
  std::string change_id;
  std::string function_name;
  std::optional<RenderedChange> change;
  double t_start = 0.0;
  double t_end = 0.0;  // window is [t_start, t_end)
  double gcpu_before = 0.0;
  double gcpu_after = 0.0;
  double delta_gcpu = 0.0;
  double cv = 0.0;  // sigma/mu over the window's own samples
  std::size_t n_samples = 0;
  bool stats_valid = false;  // false: series missing or a side had no samples

  bool operator==(const FunctionWindow&) const = default;
};

struct LabeledExample {
  FunctionWindow window;
  bool label = false;
  double release_timestamp = 0.0;

  bool operator==(const LabeledExample&) const = default;
};

struct LabelerConfig {
  double threshold_t = 0.0025;  // GCPU-fraction delta that counts as regression
  double cv_max = 1.0;
  std::size_t min_samples = 10;
};

namespace detail {

inline void check_labeler_config(const LabelerConfig& cfg) {
  if (cfg.threshold_t <= 0.0) throw ConfigError("labeler: threshold_t must be > 0");
  if (cfg.cv_max <= 0.0) throw ConfigError("labeler: cv_max must be > 0");
}

struct RangeStats {
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
};

inline RangeStats range_stats(const GcpuSeries& series, double lo, double hi) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& [t, g] : series.samples) {
    if (t < lo || t >= hi) continue;
    sum += g;
    sq += g * g;
    ++n;
  }
  RangeStats out;
  out.n = n;
  if (n == 0) return out;
  out.mean = sum / double(n);
  out.sigma = std::sqrt(std::max(0.0, sq / double(n) - out.mean * out.mean));
  return out;
}

}  // namespace detail

/// One window per change event, closing at the next change of the same
/// function (or corpus end).  The before-side covers everything since the
/// previous change of that function (or the start of the series).  Missing
/// series or empty sides yield a window with stats marked absent rather than
/// an error; remove_invalid accounts for them later.
inline std::vector<FunctionWindow> build_windows(
    std::vector<ChangeEvent> events, const std::map<std::string, GcpuSeries>& series,
    double end_time) {
  std::stable_sort(events.begin(), events.end(),
                   [](const ChangeEvent& a, const ChangeEvent& b) {
                     if (a.release_timestamp != b.release_timestamp)
                       return a.release_timestamp < b.release_timestamp;
                     return a.function_name < b.function_name;
                   });
  std::map<std::string, std::vector<std::size_t>> by_function;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const ChangeEvent& e = events[i];
    if (e.release_timestamp >= end_time)
      throw DataError("build_windows: change " + e.change_id + " released at/after end_time");
    auto& idx = by_function[e.function_name];
    if (!idx.empty() && events[idx.back()].release_timestamp == e.release_timestamp)
      throw DataError("build_windows: two changes to " + e.function_name +
                      " share one release");
    idx.push_back(i);
  }

  std::vector<FunctionWindow> windows;
  windows.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const ChangeEvent& e = events[i];
    const auto& idx = by_function[e.function_name];
    const auto at = std::find(idx.begin(), idx.end(), i);
    const double next = at + 1 == idx.end() ? end_time : events[*(at + 1)].release_timestamp;
    const double prev = at == idx.begin()
                            ? -std::numeric_limits<double>::infinity()
                            : events[*(at - 1)].release_timestamp;

    FunctionWindow w;
    w.change_id = e.change_id;
    w.function_name = e.function_name;
    w.change = e.change;
    w.t_start = e.release_timestamp;
    w.t_end = next;
    const auto it = series.find(e.function_name);
    if (it != series.end()) {
      const auto before = detail::range_stats(it->second, prev, w.t_start);
      const auto after = detail::range_stats(it->second, w.t_start, w.t_end);
      w.n_samples = after.n;
      if (before.n > 0 && after.n > 0) {
        w.stats_valid = true;
        w.gcpu_before = before.mean;
        w.gcpu_after = after.mean;
        w.delta_gcpu = after.mean - before.mean;
        w.cv = after.mean > 0.0
                   ? after.sigma / after.mean
                   : (after.sigma > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

/// Removes windows that are too sparse or too noisy to trust: fewer than
/// min_samples samples, cv above cv_max, or an undefined cv (mean zero with
/// spread).  Windows with absent stats pass through for remove_invalid to
/// account for separately.
inline std::vector<FunctionWindow> stability_filter(const std::vector<FunctionWindow>& windows,
                                                    const LabelerConfig& config) {
  detail::check_labeler_config(config);
  std::vector<FunctionWindow> kept;
  kept.reserve(windows.size());
  for (const FunctionWindow& w : windows) {
    if (w.stats_valid) {
      if (w.n_samples < config.min_samples) continue;
      if (std::isinf(w.cv) || w.cv > config.cv_max) continue;
    }
    kept.push_back(w);
  }
  return kept;
}

/// True iff the window's GCPU delta strictly exceeds the threshold.
inline bool binarize(const FunctionWindow& window, const LabelerConfig& config) {
  detail::check_labeler_config(config);
  if (!window.stats_valid)
    throw DataError("binarize: window for " + window.function_name + " has absent gcpu stats");
  return window.delta_gcpu > config.threshold_t;
}

/// Wraps windows into examples; windows with absent stats get label=false and
/// are meant to be dropped by remove_invalid.
inline std::vector<LabeledExample> label_examples(const std::vector<FunctionWindow>& windows,
                                                  const LabelerConfig& config) {
  detail::check_labeler_config(config);
  std::vector<LabeledExample> out;
  out.reserve(windows.size());
  for (const FunctionWindow& w : windows) {
    LabeledExample ex;
    ex.label = w.stats_valid && binarize(w, config);
    ex.release_timestamp = w.t_start;
    ex.window = w;
    out.push_back(std::move(ex));
  }
  return out;
}

struct RemovalReport {
  std::size_t dropped_empty_change = 0;
  std::size_t dropped_absent_stats = 0;

  std::size_t total() const { return dropped_empty_change + dropped_absent_stats; }
};

/// Drops examples whose rendered change is empty (no Added/Removed lines) or
/// whose gcpu stats are absent, and reports how many fell to each reason (an
/// example failing both counts as empty-change).
inline std::pair<std::vector<LabeledExample>, RemovalReport> remove_invalid(
    const std::vector<LabeledExample>& examples) {
  std::vector<LabeledExample> kept;
  kept.reserve(examples.size());
  RemovalReport report;
  for (const LabeledExample& ex : examples) {
    const bool has_edit =
        ex.window.change.has_value() &&
        std::any_of(ex.window.change->lines.begin(), ex.window.change->lines.end(),
                    [](const LinePatch& l) { return l.kind != LineKind::Context; });
    if (!has_edit) {
      ++report.dropped_empty_change;
    } else if (!ex.window.stats_valid) {
      ++report.dropped_absent_stats;
    } else {
      kept.push_back(ex);
    }
  }
  return {std::move(kept), report};
}

/// Train = strictly before the cutoff, test = the rest.  An empty side is the
/// caller's warning to surface, not an error.
inline std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> chronological_split(
    const std::vector<LabeledExample>& examples, double cutoff_timestamp) {
  std::vector<LabeledExample> train, test;
  for (const LabeledExample& ex : examples) {
    (ex.release_timestamp < cutoff_timestamp ? train : test).push_back(ex);
  }
  return {std::move(train), std::move(test)};
}

/// Uniform random split for experiments only: random splits leak temporally
/// clustered near-duplicates between train and test and overestimate how well
/// a model will do on genuinely future changes.
inline std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> random_split(
    const std::vector<LabeledExample>& examples, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction > 1.0)
    throw ConfigError("random_split: test_fraction must be within [0, 1]");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * double(examples.size())));
  std::vector<bool> is_test(examples.size(), false);
  for (std::size_t k = 0; k < n_test; ++k) is_test[order[k]] = true;
  std::vector<LabeledExample> train, test;
  for (std::size_t i = 0; i < examples.size(); ++i)
    (is_test[i] ? test : train).push_back(examples[i]);
  return {std::move(train), std::move(test)};
}

/// Positive fraction of a labeled set (imbalance bookkeeping).
inline double positive_fraction(const std::vector<LabeledExample>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t pos = 0;
  for (const LabeledExample& ex : examples) pos += ex.label;
  return double(pos) / double(examples.size());
}

/// Function-scoped rendering of a change's diff at the requested context
/// width; absent when the diff has no hunks or none of its lines land in the
/// function.
inline std::optional<RenderedChange> render_change(
    const UnifiedDiff& diff, const std::vector<FunctionIndexEntry>& index_before,
    const std::vector<FunctionIndexEntry>& index_after, const std::string& function_name,
    std::size_t context_width) {
  if (diff.hunks.empty()) return std::nullopt;
  const auto rendered =
      extract_function_changes(diff, index_before, index_after, context_width);
  for (const RenderedChange& rc : rendered)
    if (rc.function_name == function_name) return rc;
  return std::nullopt;
}

}  // namespace perfpred
