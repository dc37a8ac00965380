// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Code-opaque change features: who changed what, how much, and where —
// but never the code text itself.  Categorical features are one-hot or
// multi-hot encoded with a reserved default category for rare and unseen
// values, numerics pass through unscaled.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perfpred/diff.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/sparse.hpp"

namespace perfpred {

inline constexpr int kTenureClasses = 7;

struct OpaqueRow {
  std::string team;
  int tenure_class = 1;  // 1..7
  std::size_t n_files = 0;
  std::size_t sloc_changed = 0;  // added + removed lines
  std::set<std::string> base_paths;  // directories truncated to <= 3 segments
  std::set<std::string> extensions;

  bool operator==(const OpaqueRow&) const = default;
};

namespace detail {

inline std::string base_path_of(std::string_view file_path) {
  // Directory part, truncated to at most three leading segments.
  const std::size_t slash = file_path.rfind('/');
  if (slash == std::string_view::npos) return ".";
  std::string_view dir = file_path.substr(0, slash);
  std::size_t end = 0, segments = 0;
  while (end < dir.size() && segments < 3) {
    const std::size_t next = dir.find('/', end);
    if (next == std::string_view::npos) {
      end = dir.size();
    } else {
      end = next + 1;
    }
    ++segments;
  }
  while (end > 0 && dir[end - 1] == '/') --end;
  return std::string(dir.substr(0, end));
}

inline std::string extension_of(std::string_view file_path) {
  const std::size_t slash = file_path.rfind('/');
  const std::string_view name =
      slash == std::string_view::npos ? file_path : file_path.substr(slash + 1);
  const std::size_t dot = name.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return "";
  return std::string(name.substr(dot + 1));
}

}  // namespace detail

/// Collapses per-file diffs plus author metadata into one opaque feature row.
inline OpaqueRow extract_opaque(std::span<const UnifiedDiff> files, std::string_view team,
                                int tenure_class) {
  if (tenure_class < 1 || tenure_class > kTenureClasses)
    throw DataError("extract_opaque: tenure_class must be in 1.." +
                    std::to_string(kTenureClasses));
  OpaqueRow row;
  row.team = std::string(team);
  row.tenure_class = tenure_class;
  row.n_files = files.size();
  for (const UnifiedDiff& file : files) {
    row.base_paths.insert(detail::base_path_of(file.file_path));
    row.extensions.insert(detail::extension_of(file.file_path));
    for (const Hunk& hunk : file.hunks)
      for (const LinePatch& line : hunk.lines)
        if (line.kind != LineKind::Context) ++row.sloc_changed;
  }
  return row;
}

/// Fixed-width encoder fitted on the train split only.  Column layout:
/// team one-hot (default first, then kept teams sorted), tenure one-hot
/// (classes 1..7), base-path multi-hot (default first), extension multi-hot
/// (default first), then the numeric passthroughs n_files and sloc_changed.
class OpaqueEncoder {
 public:
  static constexpr const char* kDefaultLabel = "<other>";

  static OpaqueEncoder fit(const std::vector<OpaqueRow>& train_rows,
                           std::size_t min_count = 5) {
    if (train_rows.empty()) throw DataError("OpaqueEncoder::fit: empty train set");
    OpaqueEncoder enc;
    enc.min_count_ = min_count;
    std::map<std::string, std::size_t> team_counts, path_counts, ext_counts;
    for (const OpaqueRow& row : train_rows) {
      ++team_counts[row.team];
      for (const auto& p : row.base_paths) ++path_counts[p];
      for (const auto& e : row.extensions) ++ext_counts[e];
    }
    const auto keep = [min_count](const std::map<std::string, std::size_t>& counts) {
      std::vector<std::string> kept;  // std::map iteration is already sorted
      for (const auto& [cat, n] : counts)
        if (n >= min_count) kept.push_back(cat);
      return kept;
    };
    enc.teams_ = keep(team_counts);
    enc.paths_ = keep(path_counts);
    enc.exts_ = keep(ext_counts);
    return enc;
  }

  std::size_t n_columns() const {
    return (1 + teams_.size()) + kTenureClasses + (1 + paths_.size()) + (1 + exts_.size()) + 2;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    names.reserve(n_columns());
    names.push_back(std::string("team=") + kDefaultLabel);
    for (const auto& t : teams_) names.push_back("team=" + t);
    for (int q = 1; q <= kTenureClasses; ++q) names.push_back("tenure=" + std::to_string(q));
    names.push_back(std::string("path=") + kDefaultLabel);
    for (const auto& p : paths_) names.push_back("path=" + p);
    names.push_back(std::string("ext=") + kDefaultLabel);
    for (const auto& e : exts_) names.push_back("ext=" + e);
    names.push_back("n_files");
    names.push_back("sloc_changed");
    return names;
  }

  SparseVector encode_row(const OpaqueRow& row) const {
    if (row.tenure_class < 1 || row.tenure_class > kTenureClasses)
      throw DataError("encode: tenure_class out of range");
    SparseVector out;
    std::size_t base = 0;

    out.push_back(static_cast<std::uint32_t>(base + one_hot_slot(teams_, row.team)), 1.0);
    base += 1 + teams_.size();

    out.push_back(static_cast<std::uint32_t>(base + std::size_t(row.tenure_class) - 1), 1.0);
    base += kTenureClasses;

    for (const std::size_t slot : multi_hot_slots(paths_, row.base_paths))
      out.push_back(static_cast<std::uint32_t>(base + slot), 1.0);
    base += 1 + paths_.size();

    for (const std::size_t slot : multi_hot_slots(exts_, row.extensions))
      out.push_back(static_cast<std::uint32_t>(base + slot), 1.0);
    base += 1 + exts_.size();

    if (row.n_files > 0)
      out.push_back(static_cast<std::uint32_t>(base), static_cast<double>(row.n_files));
    if (row.sloc_changed > 0)
      out.push_back(static_cast<std::uint32_t>(base + 1),
                    static_cast<double>(row.sloc_changed));
    return out;
  }

  SparseMatrix encode(const std::vector<OpaqueRow>& rows) const {
    std::vector<SparseVector> encoded;
    encoded.reserve(rows.size());
    for (const OpaqueRow& row : rows) encoded.push_back(encode_row(row));
    return SparseMatrix::from_rows(encoded, n_columns());
  }

  std::size_t min_count() const { return min_count_; }
  const std::vector<std::string>& teams() const { return teams_; }
  const std::vector<std::string>& base_paths() const { return paths_; }
  const std::vector<std::string>& extensions() const { return exts_; }

  static OpaqueEncoder from_vocabularies(std::size_t min_count, std::vector<std::string> teams,
                                         std::vector<std::string> paths,
                                         std::vector<std::string> exts) {
    OpaqueEncoder enc;
    enc.min_count_ = min_count;
    enc.teams_ = std::move(teams);
    enc.paths_ = std::move(paths);
    enc.exts_ = std::move(exts);
    for (const auto* vocab : {&enc.teams_, &enc.paths_, &enc.exts_})
      for (std::size_t i = 1; i < vocab->size(); ++i)
        if ((*vocab)[i] <= (*vocab)[i - 1])
          throw DataError("OpaqueEncoder: vocabularies must be sorted and unique");
    return enc;
  }

  bool operator==(const OpaqueEncoder&) const = default;

 private:
  // Slot 0 is the default category; kept categories follow in sorted order.
  static std::size_t one_hot_slot(const std::vector<std::string>& vocab,
                                  const std::string& category) {
    const auto it = std::lower_bound(vocab.begin(), vocab.end(), category);
    if (it != vocab.end() && *it == category)
      return 1 + static_cast<std::size_t>(it - vocab.begin());
    return 0;
  }

  static std::set<std::size_t> multi_hot_slots(const std::vector<std::string>& vocab,
                                               const std::set<std::string>& categories) {
    std::set<std::size_t> slots;  // set: several unseen values share the default slot
    for (const auto& c : categories) slots.insert(one_hot_slot(vocab, c));
    return slots;
  }

  std::size_t min_count_ = 5;
  std::vector<std::string> teams_;
  std::vector<std::string> paths_;
  std::vector<std::string> exts_;
};

}  // namespace perfpred
