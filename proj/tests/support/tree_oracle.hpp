// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exhaustive best-Gini-split reference used to cross-check the sparse tree
// trainer.  Works on a dense copy of the data and recounts every candidate
// partition from scratch, so it shares no code with the production search.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "perfpred/rng.hpp"
#include "perfpred/sparse.hpp"
#include "perfpred/trees.hpp"

namespace testsupport {

struct OracleDataset {
  std::vector<std::vector<double>> x;  // dense rows
  std::vector<char> y;
  std::size_t cols = 0;

  perfpred::SparseMatrix sparse() const {
    std::vector<perfpred::SparseVector> rows(x.size());
    for (std::size_t r = 0; r < x.size(); ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (x[r][c] != 0.0) rows[r].push_back(static_cast<std::uint32_t>(c), x[r][c]);
    return perfpred::SparseMatrix::from_rows(rows, cols);
  }
};

/// Random small dataset over a coarse value grid; roughly half the cells are
/// zero and labels correlate loosely with the first column.
inline OracleDataset make_oracle_dataset(perfpred::Rng& rng) {
  OracleDataset d;
  const std::size_t n = 4 + static_cast<std::size_t>(rng.below(27));   // 4..30
  d.cols = 1 + static_cast<std::size_t>(rng.below(5));                 // 1..5
  d.x.assign(n, std::vector<double>(d.cols, 0.0));
  d.y.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c)
      if (rng.bernoulli(0.5)) d.x[r][c] = static_cast<double>(1 + rng.below(3));  // 1..3
    const bool signal = d.x[r][0] >= 2.0;
    d.y[r] = rng.bernoulli(signal ? 0.8 : 0.2) ? 1 : 0;
  }
  // Force both classes so training preconditions hold.
  d.y[0] = 0;
  d.y[n - 1] = 1;
  return d;
}

namespace detail {

inline double gini_score(double wp, double wn) {
  const double w = wn + wp;
  if (w <= 0.0) return 0.0;
  const double pn = wn / w;
  const double pp = wp / w;
  return w * (1.0 - pp * pp - pn * pn);
}

inline void oracle_node(const OracleDataset& d, const std::vector<std::size_t>& rows,
                        std::size_t min_leaf, std::vector<perfpred::SplitRecord>& log) {
  double wp = 0.0, wn = 0.0;
  for (const std::size_t r : rows)
    (d.y[r] ? wp : wn) += 1.0;

  bool found = false;
  std::uint32_t best_feature = 0;
  double best_threshold = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  if (wp != 0.0 && wn != 0.0 && rows.size() >= 2 * min_leaf) {
    for (std::size_t f = 0; f < d.cols; ++f) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (const std::size_t r : rows) values.push_back(d.x[r][f]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        double thr = 0.5 * (values[i] + values[i + 1]);
        if (thr >= values[i + 1]) thr = values[i];
        double lwp = 0.0, lwn = 0.0;
        std::size_t ln = 0;
        for (const std::size_t r : rows) {
          if (d.x[r][f] <= thr) {
            (d.y[r] ? lwp : lwn) += 1.0;
            ++ln;
          }
        }
        if (ln < min_leaf || rows.size() - ln < min_leaf) continue;
        const double score = gini_score(lwp, lwn) + gini_score(wp - lwp, wn - lwn);
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<std::uint32_t>(f);
          best_threshold = thr;
          found = true;
        }
      }
    }
  }

  if (!found) {
    const double w = wn + wp;
    log.push_back({-1, w <= 0.0 ? 0.0 : wp / w});
    return;
  }
  log.push_back({static_cast<std::int32_t>(best_feature), best_threshold});
  std::vector<std::size_t> left, right;
  for (const std::size_t r : rows)
    (d.x[r][best_feature] <= best_threshold ? left : right).push_back(r);
  oracle_node(d, left, min_leaf, log);
  oracle_node(d, right, min_leaf, log);
}

}  // namespace detail

/// Preorder (feature, threshold) / (-1, leaf value) trace of the exhaustive
/// reference tree with unit class weights.
inline std::vector<perfpred::SplitRecord> oracle_split_sequence(const OracleDataset& d,
                                                                std::size_t min_leaf = 1) {
  std::vector<std::size_t> rows(d.x.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<perfpred::SplitRecord> log;
  detail::oracle_node(d, rows, min_leaf, log);
  return log;
}

}  // namespace testsupport
