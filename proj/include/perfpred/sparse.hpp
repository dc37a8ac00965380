// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "perfpred/errors.hpp"

namespace perfpred {

/// One row of a sparse feature matrix.  Indices are strictly increasing;
/// absent columns are exact zeros.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  void push_back(std::uint32_t index, double value) {
    if (!indices.empty() && index <= indices.back())
      throw DataError("SparseVector: indices must be strictly increasing");
    indices.push_back(index);
    values.push_back(value);
  }

  std::size_t nnz() const { return indices.size(); }
};

/// Compressed sparse row matrix.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Explicit zero values are dropped so that "column absent" and "value is
  /// zero" stay interchangeable for every consumer.
  static SparseMatrix from_rows(const std::vector<SparseVector>& rows, std::size_t cols) {
    SparseMatrix m;
    m.cols_ = cols;
    m.row_ptr_.clear();
    m.row_ptr_.reserve(rows.size() + 1);
    m.row_ptr_.push_back(0);
    for (const auto& r : rows) {
      if (r.indices.size() != r.values.size())
        throw DataError("SparseMatrix: row index/value size mismatch");
      for (std::size_t i = 0; i < r.indices.size(); ++i) {
        if (r.indices[i] >= cols) throw DataError("SparseMatrix: column index out of range");
        if (i > 0 && r.indices[i] <= r.indices[i - 1])
          throw DataError("SparseMatrix: row indices must be strictly increasing");
        if (r.values[i] == 0.0) continue;
        m.col_idx_.push_back(r.indices[i]);
        m.vals_.push_back(r.values[i]);
      }
      m.row_ptr_.push_back(m.col_idx_.size());
    }
    return m;
  }

  std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::uint32_t> row_indices(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {vals_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  double at(std::size_t r, std::uint32_t c) const {
    const auto idx = row_indices(r);
    const auto val = row_values(r);
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (idx[i] == c) return val[i];
    return 0.0;
  }

  std::vector<std::vector<double>> to_dense() const {
    std::vector<std::vector<double>> d(rows(), std::vector<double>(cols_, 0.0));
    for (std::size_t r = 0; r < rows(); ++r) {
      const auto idx = row_indices(r);
      const auto val = row_values(r);
      for (std::size_t i = 0; i < idx.size(); ++i) d[r][idx[i]] = val[i];
    }
    return d;
  }

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_ = {0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> vals_;
};

}  // namespace perfpred
