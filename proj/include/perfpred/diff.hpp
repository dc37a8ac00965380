// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Unified-diff parsing, rendering, patch application, context re-rendering,
// and extraction of per-function change units via a sidecar function index.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "perfpred/errors.hpp"

namespace perfpred {

enum class LineKind { Added, Removed, Context };

struct LinePatch {
  LineKind kind;
  std::string text;

  bool operator==(const LinePatch&) const = default;
};

struct Hunk {
  std::size_t old_start = 0;  // for old_count()==0: insertion goes after this line
  std::size_t new_start = 0;
  std::vector<LinePatch> lines;

  std::size_t old_count() const {
    std::size_t n = 0;
    for (const auto& l : lines)
      if (l.kind != LineKind::Added) ++n;
    return n;
  }
  std::size_t new_count() const {
    std::size_t n = 0;
    for (const auto& l : lines)
      if (l.kind != LineKind::Removed) ++n;
    return n;
  }

  bool operator==(const Hunk&) const = default;
};

struct UnifiedDiff {
  std::string file_path;
  std::vector<Hunk> hunks;

  bool operator==(const UnifiedDiff&) const = default;
};

struct FunctionIndexEntry {
  std::string revision;
  std::string file_path;
  std::string function_name;
  std::size_t start_line = 1;  // 1-based, inclusive
  std::size_t end_line = 1;    // inclusive

  bool operator==(const FunctionIndexEntry&) const = default;
};

/// The per-function slice of a diff: all of the function's changed lines plus
/// at most context_width context lines around each contiguous changed block.
struct RenderedChange {
  std::string function_name;
  std::size_t context_width = 1;
  std::vector<LinePatch> lines;

  bool operator==(const RenderedChange&) const = default;
};

inline constexpr const char* kToplevelFunction = "<toplevel>";

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(pos));
      break;
    }
    out.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

inline bool has_code_change(const RenderedChange& change) {
  for (const auto& l : change.lines)
    if (l.kind != LineKind::Context) return true;
  return false;
}

namespace detail {

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline ParseError parse_error_at(std::size_t lineno, const std::string& what) {
  return ParseError("diff line " + std::to_string(lineno) + ": " + what);
}

// "@@ -l[,c] +l[,c] @@ ..." -> (old_start, old_count, new_start, new_count)
inline std::optional<std::array<std::size_t, 4>> parse_hunk_header(std::string_view s) {
  if (!starts_with(s, "@@ -")) return std::nullopt;
  std::size_t i = 4;
  auto read_num = [&](std::size_t& out) -> bool {
    if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
    out = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') out = out * 10 + (s[i++] - '0');
    return true;
  };
  std::array<std::size_t, 4> v = {0, 1, 0, 1};
  if (!read_num(v[0])) return std::nullopt;
  if (i < s.size() && s[i] == ',') {
    ++i;
    if (!read_num(v[1])) return std::nullopt;
  }
  if (!starts_with(s.substr(i), " +")) return std::nullopt;
  i += 2;
  if (!read_num(v[2])) return std::nullopt;
  if (i < s.size() && s[i] == ',') {
    ++i;
    if (!read_num(v[3])) return std::nullopt;
  }
  if (!starts_with(s.substr(i), " @@")) return std::nullopt;
  return v;
}

inline bool is_noise_line(std::string_view s) {
  return starts_with(s, "diff ") || starts_with(s, "index ") || starts_with(s, "new file") ||
         starts_with(s, "deleted file") || starts_with(s, "old mode") ||
         starts_with(s, "new mode") || starts_with(s, "similarity") ||
         starts_with(s, "rename ") || starts_with(s, "copy ") || starts_with(s, "Binary files");
}

inline std::string strip_path_prefix(std::string_view s) {
  // "a/dir/file" and "b/dir/file" conventions; tabs may trail the path.
  const std::size_t tab = s.find('\t');
  if (tab != std::string_view::npos) s = s.substr(0, tab);
  if (starts_with(s, "a/") || starts_with(s, "b/")) s = s.substr(2);
  return std::string(s);
}

}  // namespace detail

inline std::vector<UnifiedDiff> parse_unified_diff(const std::string& text) {
  using detail::parse_error_at;
  const std::vector<std::string> lines = split_lines(text);
  std::vector<UnifiedDiff> out;
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string& line = lines[i];
    if (line.empty() || detail::is_noise_line(line)) {
      ++i;
      continue;
    }
    if (!detail::starts_with(line, "--- "))
      throw parse_error_at(i + 1, "expected '--- ' file header, got: " + line);
    if (i + 1 >= lines.size() || !detail::starts_with(lines[i + 1], "+++ "))
      throw parse_error_at(i + 2, "expected '+++ ' file header");
    UnifiedDiff diff;
    diff.file_path = detail::strip_path_prefix(std::string_view(lines[i + 1]).substr(4));
    if (diff.file_path == "/dev/null")
      diff.file_path = detail::strip_path_prefix(std::string_view(lines[i]).substr(4));
    i += 2;
    while (i < lines.size()) {
      const auto header = detail::parse_hunk_header(lines[i]);
      if (!header) break;
      const auto [old_start, old_count, new_start, new_count] = *header;
      Hunk hunk;
      hunk.old_start = old_start;
      hunk.new_start = new_start;
      ++i;
      std::size_t remaining_old = old_count, remaining_new = new_count;
      while (remaining_old > 0 || remaining_new > 0) {
        if (i >= lines.size()) throw parse_error_at(i, "truncated hunk body");
        const std::string& body = lines[i];
        if (detail::starts_with(body, "\\ No newline")) {
          ++i;
          continue;
        }
        const char tag = body.empty() ? ' ' : body[0];
        const std::string content = body.empty() ? std::string() : body.substr(1);
        if (tag == ' ') {
          if (remaining_old == 0 || remaining_new == 0)
            throw parse_error_at(i + 1, "context line exceeds hunk counts");
          hunk.lines.push_back({LineKind::Context, content});
          --remaining_old;
          --remaining_new;
        } else if (tag == '-') {
          if (remaining_old == 0) throw parse_error_at(i + 1, "removed line exceeds hunk counts");
          hunk.lines.push_back({LineKind::Removed, content});
          --remaining_old;
        } else if (tag == '+') {
          if (remaining_new == 0) throw parse_error_at(i + 1, "added line exceeds hunk counts");
          hunk.lines.push_back({LineKind::Added, content});
          --remaining_new;
        } else {
          throw parse_error_at(i + 1, "unexpected line in hunk body: " + body);
        }
        ++i;
      }
      if (hunk.lines.empty()) throw parse_error_at(i, "empty hunk");
      if (!diff.hunks.empty()) {
        const Hunk& prev = diff.hunks.back();
        const std::size_t prev_end = prev.old_start + prev.old_count();
        if (hunk.old_start < prev_end)
          throw parse_error_at(i, "hunks overlap or are out of order");
      }
      diff.hunks.push_back(std::move(hunk));
    }
    out.push_back(std::move(diff));
  }
  return out;
}

inline std::string render_unified_diff(const UnifiedDiff& diff) {
  std::string out;
  out += "--- a/" + diff.file_path + "\n";
  out += "+++ b/" + diff.file_path + "\n";
  for (const Hunk& h : diff.hunks) {
    out += "@@ -" + std::to_string(h.old_start) + "," + std::to_string(h.old_count()) + " +" +
           std::to_string(h.new_start) + "," + std::to_string(h.new_count()) + " @@\n";
    for (const LinePatch& l : h.lines) {
      out += l.kind == LineKind::Added ? '+' : l.kind == LineKind::Removed ? '-' : ' ';
      out += l.text;
      out += '\n';
    }
  }
  return out;
}

inline std::string render_unified_diffs(const std::vector<UnifiedDiff>& diffs) {
  std::string out;
  for (const auto& d : diffs) out += render_unified_diff(d);
  return out;
}

inline std::string render_change(const RenderedChange& change) {
  std::string out;
  for (const LinePatch& l : change.lines) {
    out += l.kind == LineKind::Added ? '+' : l.kind == LineKind::Removed ? '-' : ' ';
    out += l.text;
    out += '\n';
  }
  return out;
}

/// Applies the diff to the old file content; throws DataError when context
/// or removed lines disagree with the file.
inline std::vector<std::string> apply_diff(const std::vector<std::string>& before,
                                           const UnifiedDiff& diff) {
  std::vector<std::string> out;
  std::size_t cursor = 1;  // next unconsumed old line (1-based)
  for (const Hunk& h : diff.hunks) {
    const std::size_t old_count = h.old_count();
    const std::size_t first_old = old_count == 0 ? h.old_start + 1 : h.old_start;
    if (first_old < cursor)
      throw DataError(diff.file_path + ": hunk at old line " + std::to_string(h.old_start) +
                      " overlaps a previous hunk");
    for (; cursor < first_old; ++cursor) {
      if (cursor > before.size())
        throw DataError(diff.file_path + ": hunk start beyond end of file");
      out.push_back(before[cursor - 1]);
    }
    for (const LinePatch& l : h.lines) {
      if (l.kind == LineKind::Added) {
        out.push_back(l.text);
        continue;
      }
      if (cursor > before.size())
        throw DataError(diff.file_path + ": hunk extends beyond end of file");
      if (before[cursor - 1] != l.text)
        throw DataError(diff.file_path + ": old line " + std::to_string(cursor) +
                        " does not match diff (expected \"" + l.text + "\", file has \"" +
                        before[cursor - 1] + "\")");
      if (l.kind == LineKind::Context) out.push_back(l.text);
      ++cursor;
    }
  }
  for (; cursor <= before.size(); ++cursor) out.push_back(before[cursor - 1]);
  return out;
}

namespace detail {

struct DiffEvents {
  std::vector<std::size_t> removed;                       // old line numbers, ascending
  std::map<std::size_t, std::vector<std::string>> added;  // anchor old line -> texts
};

inline DiffEvents collect_events(const UnifiedDiff& diff) {
  DiffEvents ev;
  for (const Hunk& h : diff.hunks) {
    std::size_t old_line = h.old_count() == 0 ? h.old_start + 1 : h.old_start;
    std::size_t anchor = old_line - 1;
    for (const LinePatch& l : h.lines) {
      switch (l.kind) {
        case LineKind::Context:
          anchor = old_line++;
          break;
        case LineKind::Removed:
          ev.removed.push_back(old_line);
          anchor = old_line++;
          break;
        case LineKind::Added:
          ev.added[anchor].push_back(l.text);
          break;
      }
    }
  }
  return ev;
}

}  // namespace detail

/// Re-renders the diff with exactly `width` context lines around each change
/// block (fewer at file boundaries); blocks whose contexts touch or overlap
/// are merged into one hunk.
inline UnifiedDiff expand_context(const UnifiedDiff& diff, const std::string& before_source,
                                  const std::string& after_source, std::size_t width) {
  const std::vector<std::string> before = split_lines(before_source);
  const std::vector<std::string> after = split_lines(after_source);
  if (apply_diff(before, diff) != after)
    throw DataError(diff.file_path + ": diff does not apply to the given sources");

  const detail::DiffEvents ev = detail::collect_events(diff);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);

  // Context-extended [lo, hi] intervals in old-line space; an insertion after
  // line a covers [a-w+1, a+w] (empty when w == 0).
  struct Interval {
    std::ptrdiff_t lo, hi;
  };
  std::vector<Interval> intervals;
  {
    auto rem = ev.removed.begin();
    auto add = ev.added.begin();
    auto push = [&](std::ptrdiff_t lo, std::ptrdiff_t hi) { intervals.push_back({lo, hi}); };
    while (rem != ev.removed.end() || add != ev.added.end()) {
      const bool take_removed =
          add == ev.added.end() ||
          (rem != ev.removed.end() && *rem <= add->first);
      if (take_removed) {
        const auto o = static_cast<std::ptrdiff_t>(*rem++);
        push(o - w, o + w);
      } else {
        const auto a = static_cast<std::ptrdiff_t>(add->first);
        push(a - w + 1, a + w);
        ++add;
      }
    }
  }
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& x, const Interval& y) { return x.lo < y.lo; });

  UnifiedDiff out;
  out.file_path = diff.file_path;
  std::ptrdiff_t delta = 0;  // new-file minus old-file lines emitted so far
  std::size_t block = 0;
  const auto n_before = static_cast<std::ptrdiff_t>(before.size());
  const std::vector<std::string> kNoAdds;
  auto adds_at = [&](std::ptrdiff_t anchor) -> const std::vector<std::string>& {
    const auto it = ev.added.find(static_cast<std::size_t>(anchor));
    return it == ev.added.end() ? kNoAdds : it->second;
  };
  auto removed_at = [&](std::ptrdiff_t o) {
    return std::binary_search(ev.removed.begin(), ev.removed.end(), static_cast<std::size_t>(o));
  };
  while (block < intervals.size()) {
    std::ptrdiff_t lo = intervals[block].lo;
    std::ptrdiff_t hi = intervals[block].hi;
    std::size_t next = block + 1;
    while (next < intervals.size() && intervals[next].lo <= hi + 1) {
      hi = std::max(hi, intervals[next].hi);
      ++next;
    }
    const std::ptrdiff_t clo = std::max<std::ptrdiff_t>(lo, 1);
    const std::ptrdiff_t chi = std::min(hi, n_before);
    Hunk hunk;
    std::ptrdiff_t removed_in_hunk = 0, added_in_hunk = 0;
    auto emit_adds = [&](std::ptrdiff_t anchor) {
      if (anchor < 0) return;
      for (const std::string& t : adds_at(anchor)) {
        hunk.lines.push_back({LineKind::Added, t});
        ++added_in_hunk;
      }
    };
    if (clo <= chi) {
      hunk.old_start = static_cast<std::size_t>(clo);
      hunk.new_start = static_cast<std::size_t>(clo + delta);
      emit_adds(clo - 1);
      for (std::ptrdiff_t o = clo; o <= chi; ++o) {
        if (removed_at(o)) {
          hunk.lines.push_back({LineKind::Removed, before[static_cast<std::size_t>(o - 1)]});
          ++removed_in_hunk;
        } else {
          hunk.lines.push_back({LineKind::Context, before[static_cast<std::size_t>(o - 1)]});
        }
        emit_adds(o);
      }
    } else {
      // Pure insertion rendered without context: either width is 0 (then
      // lo == anchor+1) or the old file is empty (anchor 0).
      const std::ptrdiff_t anchor = n_before == 0 ? 0 : lo - 1;
      hunk.old_start = static_cast<std::size_t>(anchor);
      hunk.new_start = static_cast<std::size_t>(anchor + delta + 1);
      emit_adds(anchor);
    }
    delta += added_in_hunk - removed_in_hunk;
    out.hunks.push_back(std::move(hunk));
    block = next;
  }
  return out;
}

namespace detail {

struct SpanLookup {
  // (start, end, name) sorted by start; validated non-overlapping
  std::vector<FunctionIndexEntry> spans;

  const FunctionIndexEntry* find(std::size_t line) const {
    auto it = std::upper_bound(spans.begin(), spans.end(), line,
                               [](std::size_t l, const FunctionIndexEntry& e) {
                                 return l < e.start_line;
                               });
    if (it == spans.begin()) return nullptr;
    --it;
    return line <= it->end_line ? &*it : nullptr;
  }
};

inline SpanLookup build_span_lookup(const std::vector<FunctionIndexEntry>& entries,
                                    const std::string& file_path) {
  SpanLookup lk;
  for (const auto& e : entries) {
    if (e.file_path != file_path) continue;
    if (e.end_line < e.start_line || e.start_line < 1)
      throw DataError("function index: bad span for " + e.function_name);
    lk.spans.push_back(e);
  }
  std::sort(lk.spans.begin(), lk.spans.end(),
            [](const FunctionIndexEntry& a, const FunctionIndexEntry& b) {
              return a.start_line < b.start_line;
            });
  for (std::size_t i = 1; i < lk.spans.size(); ++i)
    if (lk.spans[i].start_line <= lk.spans[i - 1].end_line)
      throw DataError("function index: overlapping entries " + lk.spans[i - 1].function_name +
                      " and " + lk.spans[i].function_name + " in " + file_path);
  return lk;
}

/// Keeps at most `width` context lines adjacent to each changed block; the
/// sequence must contain at least one changed line.
inline std::vector<LinePatch> trim_context(const std::vector<LinePatch>& seq, std::size_t width) {
  std::vector<LinePatch> out;
  std::size_t i = 0;
  while (i < seq.size()) {
    if (seq[i].kind != LineKind::Context) {
      out.push_back(seq[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < seq.size() && seq[j].kind == LineKind::Context) ++j;
    const bool preceded = i > 0;
    const bool followed = j < seq.size();
    for (std::size_t k = i; k < j; ++k) {
      const bool near_prev = preceded && k - i < width;
      const bool near_next = followed && j - k <= width;
      if (near_prev || near_next) out.push_back(seq[k]);
    }
    i = j;
  }
  return out;
}

}  // namespace detail

/// Slices a diff into per-function change units.  Removed lines are located
/// in the old file's index, Added lines in the new file's; changed lines
/// outside every indexed function go to the "<toplevel>" unit.
inline std::vector<RenderedChange> extract_function_changes(
    const UnifiedDiff& diff, const std::vector<FunctionIndexEntry>& index_before,
    const std::vector<FunctionIndexEntry>& index_after, std::size_t context_width = 1) {
  const detail::SpanLookup before = detail::build_span_lookup(index_before, diff.file_path);
  const detail::SpanLookup after = detail::build_span_lookup(index_after, diff.file_path);

  // Per function, per hunk: the subsequence of lines attributed to it.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<LinePatch>>> parts;
  auto append = [&](const std::string& name, std::size_t hunk_no, const LinePatch& line) {
    auto& vecs = parts[name];
    if (vecs.empty()) order.push_back(name);
    if (vecs.size() < hunk_no + 1) vecs.resize(hunk_no + 1);
    vecs[hunk_no].push_back(line);
  };
  auto name_of = [](const FunctionIndexEntry* e) {
    return e ? e->function_name : std::string(kToplevelFunction);
  };

  for (std::size_t hunk_no = 0; hunk_no < diff.hunks.size(); ++hunk_no) {
    const Hunk& h = diff.hunks[hunk_no];
    std::size_t old_line = h.old_count() == 0 ? h.old_start + 1 : h.old_start;
    std::size_t new_line = h.new_count() == 0 ? h.new_start + 1 : h.new_start;
    for (const LinePatch& l : h.lines) {
      switch (l.kind) {
        case LineKind::Removed:
          append(name_of(before.find(old_line)), hunk_no, l);
          ++old_line;
          break;
        case LineKind::Added:
          append(name_of(after.find(new_line)), hunk_no, l);
          ++new_line;
          break;
        case LineKind::Context: {
          const FunctionIndexEntry* e = before.find(old_line);
          if (!e) e = after.find(new_line);
          append(name_of(e), hunk_no, l);
          ++old_line;
          ++new_line;
          break;
        }
      }
    }
  }

  std::vector<RenderedChange> out;
  for (const std::string& name : order) {
    RenderedChange change;
    change.function_name = name;
    change.context_width = context_width;
    for (const auto& seq : parts[name]) {
      if (seq.empty()) continue;
      bool changed = false;
      for (const auto& l : seq)
        if (l.kind != LineKind::Context) changed = true;
      if (!changed) continue;  // stray context pulled from a neighbouring span
      const auto trimmed = detail::trim_context(seq, context_width);
      change.lines.insert(change.lines.end(), trimmed.begin(), trimmed.end());
    }
    if (!change.lines.empty()) out.push_back(std::move(change));
  }
  return out;
}

}  // namespace perfpred
