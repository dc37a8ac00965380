// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "perfpred/metrics.hpp"
#include "perfpred/rng.hpp"

using namespace perfpred;

namespace {

ScoredSet random_set(Rng& rng, std::size_t max_n, double pos_rate, int distinct_scores) {
  while (true) {
    ScoredSet s;
    const std::size_t n = 2 + rng.below(max_n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      ScoredExample e;
      e.score = double(rng.below(distinct_scores)) / double(distinct_scores);
      e.label = rng.bernoulli(pos_rate);
      s.push_back(e);
    }
    bool has_pos = false, has_neg = false;
    for (const auto& e : s) (e.label ? has_pos : has_neg) = true;
    if (has_pos && has_neg) return s;
  }
}

// O(P*N) definition of AUC: concordant pairs plus half the ties.
double pairwise_auc(const ScoredSet& s) {
  double num = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : s) {
    if (!p.label) continue;
    for (const auto& n : s) {
      if (n.label) continue;
      ++pairs;
      if (p.score > n.score)
        num += 1.0;
      else if (p.score == n.score)
        num += 0.5;
    }
  }
  return num / double(pairs);
}

}  // namespace

TEST_CASE("roc_auc on separable and degenerate sets", "[metrics]") {
  ScoredSet perfect = {{0.9, true, 0}, {0.8, true, 0}, {0.2, false, 0}, {0.1, false, 0}};
  CHECK(roc_auc(perfect) == 1.0);
  ScoredSet inverted = {{0.1, true, 0}, {0.9, false, 0}};
  CHECK(roc_auc(inverted) == 0.0);
  ScoredSet ties = {{0.5, true, 0}, {0.5, false, 0}, {0.5, true, 0}, {0.5, false, 0}};
  CHECK(roc_auc(ties) == 0.5);
  CHECK_THROWS_AS(roc_auc({{0.5, true, 0}}), DataError);
  CHECK_THROWS_AS(roc_auc({{0.5, true, 0}, {0.2, true, 0}}), DataError);
}

TEST_CASE("roc_auc matches the pairwise brute force", "[metrics]") {
  Rng rng(71);
  for (int iter = 0; iter < 100; ++iter) {
    const auto s = random_set(rng, 60, 0.3, iter % 2 ? 7 : 1000);
    CHECK_THAT(roc_auc(s), Catch::Matchers::WithinAbs(pairwise_auc(s), 1e-12));
  }
}

TEST_CASE("roc_auc is invariant under monotone score transforms", "[metrics]") {
  Rng rng(72);
  const auto s = random_set(rng, 80, 0.4, 50);
  auto transformed = s;
  for (auto& e : transformed) e.score = 1.0 / (1.0 + std::exp(-(3.0 * e.score + 1.0)));
  CHECK_THAT(roc_auc(transformed), Catch::Matchers::WithinAbs(roc_auc(s), 1e-12));
}

TEST_CASE("pr_curve and average precision on simple sets", "[metrics]") {
  ScoredSet perfect = {{0.9, true, 0}, {0.8, true, 0}, {0.2, false, 0}};
  CHECK_THAT(average_precision(perfect), Catch::Matchers::WithinAbs(1.0, 1e-15));
  // Constant scores: a single curve point at recall 1 with precision == prior.
  ScoredSet constant = {{0.5, true, 0}, {0.5, false, 0}, {0.5, false, 0}, {0.5, false, 0}};
  const auto curve = pr_curve(constant);
  REQUIRE(curve.size() == 1);
  CHECK(curve[0].recall == 1.0);
  CHECK(curve[0].precision == 0.25);
  CHECK(average_precision(constant) == 0.25);
}

TEST_CASE("average precision of random scores approaches the prior", "[metrics]") {
  Rng rng(73);
  const double prior = 0.3;
  const int trials = 60;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    ScoredSet s;
    for (int i = 0; i < 400; ++i) s.push_back({rng.uniform(), rng.bernoulli(prior), 0});
    bool has_pos = false, has_neg = false;
    for (const auto& e : s) (e.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
      --t;
      continue;
    }
    const double ap = average_precision(s);
    sum += ap;
    sumsq += ap * ap;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(std::max(0.0, sumsq / trials - mean * mean));
  CHECK(std::abs(mean - prior) <= 3.0 * sd / std::sqrt(double(trials)) + 0.01);
}

TEST_CASE("confusion_at matches a naive recount and partitions the set", "[metrics]") {
  Rng rng(74);
  for (int iter = 0; iter < 60; ++iter) {
    const auto s = random_set(rng, 50, 0.4, 9);
    const double thr = rng.uniform();
    const auto m = confusion_at(s, thr);
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& e : s) {
      if (e.score > thr && e.label) ++tp;
      if (e.score > thr && !e.label) ++fp;
      if (e.score <= thr && !e.label) ++tn;
      if (e.score <= thr && e.label) ++fn;
    }
    CHECK(m.tp == tp);
    CHECK(m.fp == fp);
    CHECK(m.tn == tn);
    CHECK(m.fn == fn);
    CHECK(m.total() == s.size());
  }
  ScoredSet s = {{1.0, true, 0}, {0.3, false, 0}};
  const auto all_neg = confusion_at(s, 1.0);
  CHECK(all_neg.tp + all_neg.fp == 0);
}

TEST_CASE("f1 is the harmonic mean of precision and recall", "[metrics]") {
  ConfusionMatrix m{.tp = 3, .fp = 1, .tn = 10, .fn = 2};
  const double p = 3.0 / 4.0, r = 3.0 / 5.0;
  CHECK_THAT(m.f1(), Catch::Matchers::WithinAbs(2 * p * r / (p + r), 1e-15));
}

TEST_CASE("tune_threshold at target recall 1.0 keeps every positive", "[metrics]") {
  Rng rng(75);
  for (int iter = 0; iter < 40; ++iter) {
    const auto s = random_set(rng, 60, 0.2, 40);
    const auto policy = tune_threshold(s, {ThresholdMode::TargetRecall, 1.0, 0.0});
    double min_pos = 1e9;
    for (const auto& e : s)
      if (e.label) min_pos = std::min(min_pos, e.score);
    CHECK(policy.threshold < min_pos);
    CHECK(confusion_at(s, policy.threshold).fn == 0);
  }
}

TEST_CASE("tune_threshold achieves the requested recall", "[metrics]") {
  Rng rng(76);
  for (int iter = 0; iter < 40; ++iter) {
    const auto s = random_set(rng, 80, 0.3, 60);
    for (const double target : {0.5, 0.75, 0.9}) {
      const auto policy = tune_threshold(s, {ThresholdMode::TargetRecall, target, 0.0});
      CHECK(confusion_at(s, policy.threshold).recall() >= target);
    }
  }
}

TEST_CASE("tuned thresholds are nonincreasing in target recall", "[metrics]") {
  Rng rng(77);
  const auto s = random_set(rng, 100, 0.3, 80);
  double prev = 1e9;
  for (double target = 0.1; target <= 1.0; target += 0.1) {
    const auto policy = tune_threshold(s, {ThresholdMode::TargetRecall, target, 0.0});
    CHECK(policy.threshold <= prev);
    prev = policy.threshold;
  }
}

TEST_CASE("tune_threshold with precision targets", "[metrics]") {
  ScoredSet s = {{0.9, true, 0}, {0.8, false, 0}, {0.7, true, 0}, {0.2, false, 0}};
  const auto policy = tune_threshold(s, {ThresholdMode::TargetPrecision, 0.6, 0.0});
  const auto m = confusion_at(s, policy.threshold);
  CHECK(m.precision() >= 0.6);
  // Maximum-recall choice among qualifying thresholds.
  CHECK(m.recall() == 1.0);
  // Highest-scored example is negative, so no threshold reaches 0.99.
  ScoredSet capped = {{0.95, false, 0}, {0.9, true, 0}, {0.8, false, 0}, {0.7, true, 0}};
  try {
    tune_threshold(capped, {ThresholdMode::TargetPrecision, 0.99, 0.0});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("maximum attainable") != std::string::npos);
  }
}

TEST_CASE("fixed threshold policy passes through", "[metrics]") {
  const auto policy = tune_threshold({}, {ThresholdMode::Fixed, 0.0, 0.42});
  CHECK(policy.threshold == 0.42);
}

TEST_CASE("filtering_report pass-through and perfect-recall cases", "[metrics]") {
  ScoredSet s = {{0.9, true, 0}, {0.6, false, 0}, {0.4, false, 0}, {0.2, false, 0}};
  const auto pass = filtering_report(s, 0.0);
  CHECK(pass.fraction_filtered == 0.0);
  CHECK(pass.recall == 1.0);
  CHECK(pass.efficiency_lift == 1.0);

  const auto policy = tune_threshold(s, {ThresholdMode::TargetRecall, 1.0, 0.0});
  const auto rep = filtering_report(s, policy.threshold);
  CHECK(rep.missed_regressions == 0);
  CHECK(rep.fraction_filtered > 0.0);
  CHECK(rep.n_flagged + rep.n_filtered == rep.n_total);
  CHECK(rep.efficiency_lift > 1.0);
}
