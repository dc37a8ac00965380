// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Ranking metrics for imbalanced binary classification, threshold policies,
// and the pre-filtering deployment report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "perfpred/errors.hpp"

namespace perfpred {

struct ScoredExample {
  double score = 0.0;
  bool label = false;
  std::int64_t timestamp = 0;
};

using ScoredSet = std::vector<ScoredExample>;

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  std::size_t positives() const { return tp + fn; }
  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  // Same metrics for the negative (majority) class.
  double negative_precision() const { return tn + fn == 0 ? 0.0 : double(tn) / double(tn + fn); }
  double negative_recall() const { return tn + fp == 0 ? 0.0 : double(tn) / double(tn + fp); }
  double negative_f1() const {
    const double p = negative_precision(), r = negative_recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

namespace detail {

inline void require_both_classes(const ScoredSet& s, const char* op) {
  std::size_t pos = 0;
  for (const auto& e : s) pos += e.label ? 1 : 0;
  if (s.empty() || pos == 0 || pos == s.size())
    throw DataError(std::string(op) + ": needs at least one example of each class");
}

}  // namespace detail

/// Probability that a random positive outscores a random negative; ties
/// count one half.  Computed via the rank-sum identity.
inline double roc_auc(const ScoredSet& s) {
  detail::require_both_classes(s, "roc_auc");
  std::vector<std::size_t> order(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s[a].score < s[b].score; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && s[order[j]].score == s[order[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (s[order[k]].label) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = s.size() - n_pos;
  return (pos_rank_sum - 0.5 * double(n_pos) * double(n_pos + 1)) /
         (double(n_pos) * double(n_neg));
}

struct PrPoint {
  double score_cut = 0.0;  // predict positive when score >= score_cut
  double recall = 0.0;
  double precision = 0.0;
};

/// One point per distinct score, in increasing-recall order.
inline std::vector<PrPoint> pr_curve(const ScoredSet& s) {
  detail::require_both_classes(s, "pr_curve");
  std::vector<std::size_t> order(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s[a].score > s[b].score; });
  std::size_t n_pos = 0;
  for (const auto& e : s) n_pos += e.label ? 1 : 0;
  std::vector<PrPoint> curve;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = s[order[i]].score;
    std::size_t j = i;
    while (j < order.size() && s[order[j]].score == v) {
      if (s[order[j]].label)
        ++tp;
      else
        ++fp;
      ++j;
    }
    curve.push_back({v, double(tp) / double(n_pos), double(tp) / double(tp + fp)});
    i = j;
  }
  return curve;
}

/// Step-wise interpolated area under the PR curve: sum of (R_i - R_{i-1}) * P_i.
inline double average_precision(const ScoredSet& s) {
  double ap = 0.0, prev_recall = 0.0;
  for (const PrPoint& p : pr_curve(s)) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

/// Positive prediction means score strictly greater than the threshold.
inline ConfusionMatrix confusion_at(const ScoredSet& s, double threshold) {
  ConfusionMatrix m;
  for (const auto& e : s) {
    const bool predicted = e.score > threshold;
    if (predicted && e.label)
      ++m.tp;
    else if (predicted)
      ++m.fp;
    else if (e.label)
      ++m.fn;
    else
      ++m.tn;
  }
  return m;
}

enum class ThresholdMode { TargetRecall, TargetPrecision, Fixed };

struct ThresholdPolicy {
  ThresholdMode mode = ThresholdMode::TargetRecall;
  double target = 1.0;
  double threshold = 0.0;  // chosen (or fixed) threshold
};

/// Chooses the threshold on a tuning set.  For target recall r, this is the
/// highest representable threshold classifying the top ceil(r*P) positives
/// as positive; for target precision, the lowest threshold (maximum recall)
/// whose precision still meets the target.
inline ThresholdPolicy tune_threshold(const ScoredSet& tuning, ThresholdPolicy policy) {
  if (policy.mode == ThresholdMode::Fixed) return policy;
  if (policy.target <= 0.0 || policy.target > 1.0)
    throw ConfigError("tune_threshold: target must be in (0, 1]");
  detail::require_both_classes(tuning, "tune_threshold");
  if (policy.mode == ThresholdMode::TargetRecall) {
    std::vector<double> pos_scores;
    for (const auto& e : tuning)
      if (e.label) pos_scores.push_back(e.score);
    std::sort(pos_scores.begin(), pos_scores.end(), std::greater<>());
    const auto needed = static_cast<std::size_t>(
        std::ceil(policy.target * static_cast<double>(pos_scores.size()) - 1e-12));
    const double kth = pos_scores[needed - 1];
    policy.threshold = std::nextafter(kth, -std::numeric_limits<double>::infinity());
    return policy;
  }
  // TargetPrecision: walk thresholds from high to low, keep the last (lowest)
  // one meeting the target.
  std::vector<double> cuts;
  for (const auto& e : tuning) cuts.push_back(e.score);
  std::sort(cuts.begin(), cuts.end(), std::greater<>());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  bool found = false;
  double best_precision = 0.0;
  for (const double cut : cuts) {
    const double thr = std::nextafter(cut, -std::numeric_limits<double>::infinity());
    const ConfusionMatrix m = confusion_at(tuning, thr);
    best_precision = std::max(best_precision, m.precision());
    if (m.precision() >= policy.target) {
      policy.threshold = thr;
      found = true;
    }
  }
  if (!found)
    throw DataError("tune_threshold: precision target " + std::to_string(policy.target) +
                    " unattainable; maximum attainable is " + std::to_string(best_precision));
  return policy;
}

/// Deployment summary for running the classifier as a pre-filter: everything
/// scored at or below the threshold is discarded before downstream checks.
struct FilteringReport {
  std::size_t n_total = 0;
  std::size_t n_flagged = 0;   // predicted positive, kept for downstream tools
  std::size_t n_filtered = 0;  // predicted benign, dropped
  std::size_t missed_regressions = 0;
  double fraction_filtered = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double prior = 0.0;
  // precision / prior; how much denser regressions are among kept diffs than
  // under a random baseline that only knows the prior.
  double efficiency_lift = 0.0;
};

inline FilteringReport filtering_report(const ScoredSet& s, double threshold) {
  const ConfusionMatrix m = confusion_at(s, threshold);
  FilteringReport r;
  r.n_total = m.total();
  r.n_flagged = m.tp + m.fp;
  r.n_filtered = m.tn + m.fn;
  r.missed_regressions = m.fn;
  r.fraction_filtered = r.n_total == 0 ? 0.0 : double(r.n_filtered) / double(r.n_total);
  r.recall = m.recall();
  r.precision = m.precision();
  r.prior = r.n_total == 0 ? 0.0 : double(m.positives()) / double(r.n_total);
  r.efficiency_lift = r.prior == 0.0 ? 0.0 : r.precision / r.prior;
  return r;
}

}  // namespace perfpred
