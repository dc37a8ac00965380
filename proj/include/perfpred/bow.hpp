// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bag-of-words representation of rendered changes: prefixed sub-word
// tokenization plus Okapi BM25 vectorization.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "perfpred/diff.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/sparse.hpp"

namespace perfpred {

/// Token -> count.  Tokens are lower-case sub-words; tokens from Added lines
/// carry a "+" prefix, Removed lines "-", Context lines none.
using TokenMultiset = std::map<std::string, std::size_t>;

namespace detail {

inline bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}
inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Comments run to end of line; "//" and "#" are the corpus's comment leaders.
inline std::string_view strip_comment(std::string_view line) {
  const std::size_t slashes = line.find("//");
  const std::size_t hash = line.find('#');
  const std::size_t cut = std::min(slashes, hash);
  return cut == std::string_view::npos ? line : line.substr(0, cut);
}

/// Splits one word run at camel-case boundaries, then removes digits and
/// lower-cases; empty results are dropped.
inline void split_word(std::string_view word, const std::string& prefix,
                       TokenMultiset& out) {
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string token = prefix;
    for (std::size_t i = start; i < end; ++i) {
      const char c = word[i];
      if (is_digit(c)) continue;
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (token.size() > prefix.size()) ++out[token];
    start = end;
  };
  for (std::size_t i = 1; i < word.size(); ++i) {
    const bool rising = (is_lower(word[i - 1]) || is_digit(word[i - 1])) && is_upper(word[i]);
    const bool acronym_end = is_upper(word[i - 1]) && is_upper(word[i]) &&
                             i + 1 < word.size() && is_lower(word[i + 1]);
    if (rising || acronym_end) flush(i);
  }
  flush(word.size());
}

inline void tokenize_line(LineKind kind, std::string_view text, TokenMultiset& out) {
  const std::string prefix =
      kind == LineKind::Added ? "+" : kind == LineKind::Removed ? "-" : "";
  const std::string_view code = strip_comment(text);
  std::size_t i = 0;
  while (i < code.size()) {
    if (!is_word_char(code[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < code.size() && is_word_char(code[j])) ++j;
    split_word(code.substr(i, j - i), prefix, out);
    i = j;
  }
}

}  // namespace detail

inline TokenMultiset tokenize_change(const RenderedChange& change) {
  TokenMultiset out;
  for (const LinePatch& l : change.lines) detail::tokenize_line(l.kind, l.text, out);
  return out;
}

/// Train-set token -> dense column index, assigned lexicographically.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(const std::vector<TokenMultiset>& train_documents) {
    if (train_documents.empty()) throw DataError("Vocabulary: empty train corpus");
    std::map<std::string, std::uint32_t> all;
    for (const auto& doc : train_documents)
      for (const auto& [token, count] : doc) all.emplace(token, 0);
    if (all.empty()) throw DataError("Vocabulary: train corpus has no tokens");
    Vocabulary v;
    v.tokens_.reserve(all.size());
    for (auto& [token, idx] : all) {
      idx = static_cast<std::uint32_t>(v.tokens_.size());
      v.tokens_.push_back(token);
      v.index_.emplace(token, idx);
    }
    return v;
  }

  static Vocabulary from_tokens(std::vector<std::string> sorted_tokens) {
    Vocabulary v;
    v.tokens_ = std::move(sorted_tokens);
    for (std::size_t i = 0; i + 1 < v.tokens_.size(); ++i)
      if (!(v.tokens_[i] < v.tokens_[i + 1]))
        throw DataError("Vocabulary: tokens not strictly sorted");
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
      v.index_.emplace(v.tokens_[i], static_cast<std::uint32_t>(i));
    return v;
  }

  std::optional<std::uint32_t> find(const std::string& token) const {
    const auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::uint32_t column) const { return tokens_.at(column); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  double avgdl = 0.0;
  std::size_t n_documents = 0;
  std::vector<double> idf;  // per vocabulary column

  static Bm25Params fit(const Vocabulary& vocab, const std::vector<TokenMultiset>& train_documents,
                        double k1 = 1.2, double b = 0.75) {
    if (k1 <= 0.0 || b < 0.0 || b > 1.0) throw ConfigError("Bm25Params: k1 > 0, 0 <= b <= 1");
    if (train_documents.empty()) throw DataError("Bm25Params: empty train corpus");
    Bm25Params p;
    p.k1 = k1;
    p.b = b;
    p.n_documents = train_documents.size();
    std::vector<std::size_t> df(vocab.size(), 0);
    std::size_t total_tokens = 0;
    for (const auto& doc : train_documents) {
      for (const auto& [token, count] : doc) {
        total_tokens += count;
        if (const auto col = vocab.find(token)) ++df[*col];
      }
    }
    p.avgdl = static_cast<double>(total_tokens) / static_cast<double>(p.n_documents);
    if (p.avgdl <= 0.0) throw DataError("Bm25Params: average document length is zero");
    const double n = static_cast<double>(p.n_documents);
    p.idf.resize(vocab.size());
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      const double d = static_cast<double>(df[c]);
      p.idf[c] = std::log(1.0 + (n - d + 0.5) / (d + 0.5));
    }
    return p;
  }
};

/// BM25 weights for one document; tokens absent from the vocabulary are
/// ignored but still count toward the document length.
inline SparseVector vectorize(const Vocabulary& vocab, const Bm25Params& params,
                              const TokenMultiset& document) {
  std::size_t dl = 0;
  for (const auto& [token, count] : document) dl += count;
  SparseVector out;
  const double norm =
      params.k1 * (1.0 - params.b + params.b * static_cast<double>(dl) / params.avgdl);
  for (const auto& [token, count] : document) {
    const auto col = vocab.find(token);
    if (!col) continue;
    const double tf = static_cast<double>(count);
    out.push_back(*col, params.idf[*col] * tf * (params.k1 + 1.0) / (tf + norm));
  }
  return out;
}

inline SparseMatrix vectorize_all(const Vocabulary& vocab, const Bm25Params& params,
                                  const std::vector<TokenMultiset>& documents) {
  std::vector<SparseVector> rows;
  rows.reserve(documents.size());
  for (const auto& doc : documents) rows.push_back(vectorize(vocab, params, doc));
  return SparseMatrix::from_rows(rows, vocab.size());
}

}  // namespace perfpred
