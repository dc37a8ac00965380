// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Counterfactual explanations for regression predictions: find a small,
// plausible set of token substitutions (call names, imported modules) that
// moves the model's score to the benign side of the deployed threshold.
// Search is greedy, guided by the model score, followed by pruning to a
// 1-minimal substitution set.  Plausibility comes from train-corpus token
// frequencies; the generator is an interface seam, so a smarter in-filling
// model can replace it without touching the search.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perfpred/bow.hpp"
#include "perfpred/diff.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/sparse.hpp"
#include "perfpred/trees.hpp"

namespace perfpred {

enum class SiteKind { Call, Import };

/// A perturbable token occurrence inside a rendered change: a name invoked
/// with `(` or the module of an import statement.
struct PerturbationSite {
  std::size_t line = 0;   // index into RenderedChange::lines
  std::size_t begin = 0;  // character span of the token within the line text
  std::size_t end = 0;    // exclusive
  SiteKind kind = SiteKind::Call;
  std::string token;      // the original text at the span

  bool operator==(const PerturbationSite&) const = default;
};

struct Substitution {
  PerturbationSite site;
  std::string original;
  std::string replacement;

  bool operator==(const Substitution&) const = default;
};

struct Counterfactual {
  std::vector<Substitution> substitutions;
  double original_score = 0.0;
  double flipped_score = 0.0;
  double threshold = 0.0;  // deployed decision threshold the flip is relative to

  bool operator==(const Counterfactual&) const = default;
};

using ChangeScorer = std::function<double(const RenderedChange&)>;

namespace detail {

inline bool is_identifier_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
inline bool is_identifier_char(char c) {
  return is_identifier_start(c) || (c >= '0' && c <= '9');
}

inline const std::set<std::string>& non_call_keywords() {
  static const std::set<std::string> kw = {
      "and",   "assert", "class",  "def",   "del",   "elif", "else",  "except",
      "for",   "from",   "if",     "import", "in",   "is",   "lambda", "not",
      "or",    "pass",   "print",  "raise", "return", "try", "while", "with",
      "yield"};
  return kw;
}

/// Module token of an import-style line ("import x", "from x import y"),
/// or nullopt if the line is not an import.
inline std::optional<std::pair<std::size_t, std::size_t>> import_module_span(
    std::string_view text) {
  std::size_t at = 0;
  while (at < text.size() && (text[at] == ' ' || text[at] == '\t')) ++at;
  std::size_t kw_len = 0;
  if (text.substr(at).starts_with("import ")) kw_len = 7;
  else if (text.substr(at).starts_with("from ")) kw_len = 5;
  else return std::nullopt;
  std::size_t begin = at + kw_len;
  while (begin < text.size() && text[begin] == ' ') ++begin;
  std::size_t end = begin;
  while (end < text.size() && (is_identifier_char(text[end]) || text[end] == '.')) ++end;
  if (end == begin) return std::nullopt;
  return std::make_pair(begin, end);
}

}  // namespace detail

namespace detail {

inline bool is_definition_header(std::string_view text) {
  std::size_t at = 0;
  while (at < text.size() && (text[at] == ' ' || text[at] == '\t')) ++at;
  return text.substr(at).starts_with("def ") || text.substr(at).starts_with("class ");
}

}  // namespace detail

/// Every call-name and import-module token location in the rendered change,
/// ordered by (line, span start).  Lines of every kind participate; `def` /
/// `class` headers are declarations, not calls, and contribute no sites.
inline std::vector<PerturbationSite> find_sites(const RenderedChange& change) {
  std::vector<PerturbationSite> sites;
  for (std::size_t l = 0; l < change.lines.size(); ++l) {
    const std::string& text = change.lines[l].text;
    if (detail::is_definition_header(text)) continue;
    if (const auto span = detail::import_module_span(text)) {
      PerturbationSite site;
      site.line = l;
      site.begin = span->first;
      site.end = span->second;
      site.kind = SiteKind::Import;
      site.token = text.substr(span->first, span->second - span->first);
      sites.push_back(std::move(site));
      continue;
    }
    std::size_t at = 0;
    while (at < text.size()) {
      if (!detail::is_identifier_start(text[at])) {
        ++at;
        continue;
      }
      std::size_t end = at;
      while (end < text.size() && detail::is_identifier_char(text[end])) ++end;
      if (end < text.size() && text[end] == '(' &&
          !detail::non_call_keywords().count(text.substr(at, end - at))) {
        PerturbationSite site;
        site.line = l;
        site.begin = at;
        site.end = end;
        site.kind = SiteKind::Call;
        site.token = text.substr(at, end - at);
        sites.push_back(std::move(site));
      }
      at = end;
    }
  }
  return sites;
}

/// Plausibility generator: token frequencies per site kind, counted over the
/// perturbation sites of a train corpus of rendered changes.
class CorpusFrequencyGenerator {
 public:
  CorpusFrequencyGenerator() = default;

  static CorpusFrequencyGenerator fit(const std::vector<RenderedChange>& train) {
    CorpusFrequencyGenerator g;
    for (const RenderedChange& change : train)
      for (const PerturbationSite& site : find_sites(change)) ++g.counts_[site.kind][site.token];
    g.fitted_ = true;
    return g;
  }

  static CorpusFrequencyGenerator from_counts(
      std::map<std::string, std::size_t> call_counts,
      std::map<std::string, std::size_t> import_counts) {
    CorpusFrequencyGenerator g;
    g.counts_[SiteKind::Call] = std::move(call_counts);
    g.counts_[SiteKind::Import] = std::move(import_counts);
    g.fitted_ = true;
    return g;
  }

  bool fitted() const { return fitted_; }

  const std::map<std::string, std::size_t>& counts(SiteKind kind) const {
    static const std::map<std::string, std::size_t> empty;
    const auto it = counts_.find(kind);
    return it == counts_.end() ? empty : it->second;
  }

 private:
  std::map<SiteKind, std::map<std::string, std::size_t>> counts_;
  bool fitted_ = false;
};

/// Top-k most frequent train-corpus tokens of the site's kind, most frequent
/// first (ties alphabetically), excluding the site's original token.
inline std::vector<std::string> propose(const PerturbationSite& site,
                                        const CorpusFrequencyGenerator& generator,
                                        std::size_t k) {
  if (!generator.fitted())
    throw DataError("propose: plausibility generator has not been fitted");
  const auto& counts = generator.counts(site.kind);
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [token, count] : ranked) {
    if (out.size() >= k) break;
    if (token == site.token) continue;
    out.push_back(token);
  }
  return out;
}

/// The rendered change with the given substitutions applied; everything
/// outside the substituted spans is byte-identical to the input.
inline RenderedChange apply_substitutions(const RenderedChange& change,
                                          const std::vector<Substitution>& substitutions) {
  RenderedChange out = change;
  std::vector<const Substitution*> order;
  order.reserve(substitutions.size());
  for (const Substitution& s : substitutions) order.push_back(&s);
  // Right-to-left within each line so earlier spans stay valid.
  std::sort(order.begin(), order.end(), [](const Substitution* a, const Substitution* b) {
    if (a->site.line != b->site.line) return a->site.line < b->site.line;
    return a->site.begin > b->site.begin;
  });
  for (const Substitution* s : order) {
    if (s->site.line >= out.lines.size())
      throw DataError("apply_substitutions: site line out of range");
    std::string& text = out.lines[s->site.line].text;
    if (s->site.end > text.size() ||
        text.compare(s->site.begin, s->site.end - s->site.begin, s->original) != 0)
      throw DataError("apply_substitutions: site does not match original token " + s->original);
    text.replace(s->site.begin, s->site.end - s->site.begin, s->replacement);
  }
  return out;
}

struct ExplainConfig {
  double threshold = 0.5;      // deployed decision threshold (score > t = flag)
  std::size_t max_edits = 4;
  std::size_t k_per_site = 5;
};

/// Greedy counterfactual search: repeatedly applies the single substitution
/// (over all sites x proposals) with the lowest resulting score until the
/// prediction flips or the edit budget runs out, then prunes the substitution
/// set to 1-minimality.  Deterministic: ties break on site order, then
/// proposal order.
inline std::optional<Counterfactual> greedy_search(const ChangeScorer& scorer,
                                                   const CorpusFrequencyGenerator& generator,
                                                   const RenderedChange& change,
                                                   const ExplainConfig& config) {
  const double original_score = scorer(change);
  if (!(original_score > config.threshold))
    throw DataError("greedy_search: not a positive prediction (score " +
                    std::to_string(original_score) + " <= threshold " +
                    std::to_string(config.threshold) + ")");

  const std::vector<PerturbationSite> sites = find_sites(change);
  std::vector<std::vector<std::string>> proposals;
  proposals.reserve(sites.size());
  for (const PerturbationSite& site : sites)
    proposals.push_back(propose(site, generator, config.k_per_site));

  std::vector<Substitution> applied;
  std::vector<bool> used(sites.size(), false);
  double current = original_score;

  for (std::size_t step = 0; step < config.max_edits; ++step) {
    double best_score = current;
    std::optional<Substitution> best;
    for (std::size_t si = 0; si < sites.size(); ++si) {
      if (used[si]) continue;
      for (const std::string& replacement : proposals[si]) {
        std::vector<Substitution> candidate = applied;
        candidate.push_back({sites[si], sites[si].token, replacement});
        const double score = scorer(apply_substitutions(change, candidate));
        if (!best || score < best_score) {
          best_score = score;
          best = candidate.back();
        }
      }
    }
    if (!best) return std::nullopt;  // no substitutable site remains
    for (std::size_t si = 0; si < sites.size(); ++si)
      if (sites[si] == best->site) used[si] = true;
    applied.push_back(*best);
    current = best_score;
    if (current <= config.threshold) break;
  }
  if (current > config.threshold) return std::nullopt;

  // Prune to 1-minimality: drop any substitution whose removal keeps the flip.
  bool removed = true;
  while (removed && applied.size() > 1) {
    removed = false;
    for (std::size_t i = 0; i < applied.size(); ++i) {
      std::vector<Substitution> subset;
      for (std::size_t j = 0; j < applied.size(); ++j)
        if (j != i) subset.push_back(applied[j]);
      if (scorer(apply_substitutions(change, subset)) <= config.threshold) {
        applied = std::move(subset);
        removed = true;
        break;
      }
    }
  }

  Counterfactual cf;
  cf.substitutions = std::move(applied);
  cf.original_score = original_score;
  cf.flipped_score = scorer(apply_substitutions(change, cf.substitutions));
  cf.threshold = config.threshold;
  return cf;
}

/// Scorer over rendered changes for a bag-of-words model: tokenize, BM25
/// vectorize against the trained vocabulary, and take the model probability.
template <typename Model>
ChangeScorer make_bow_scorer(Vocabulary vocabulary, Bm25Params params, Model model) {
  return [vocabulary = std::move(vocabulary), params = std::move(params),
          model = std::move(model)](const RenderedChange& change) {
    const TokenMultiset document = tokenize_change(change);
    std::vector<SparseVector> rows;
    rows.push_back(vectorize(vocabulary, params, document));
    const SparseMatrix x = SparseMatrix::from_rows(rows, vocabulary.size());
    return predict_proba(model, x).at(0);
  };
}

/// Human-readable rendering: the original change with `original -> replacement`
/// annotations under each substituted line.
inline std::string format_counterfactual(const RenderedChange& change,
                                         const Counterfactual& cf) {
  std::map<std::size_t, std::vector<const Substitution*>> by_line;
  for (const Substitution& s : cf.substitutions) by_line[s.site.line].push_back(&s);
  for (auto& [line, subs] : by_line)
    std::sort(subs.begin(), subs.end(), [](const Substitution* a, const Substitution* b) {
      return a->site.begin < b->site.begin;
    });
  std::string out;
  for (std::size_t l = 0; l < change.lines.size(); ++l) {
    const LinePatch& line = change.lines[l];
    switch (line.kind) {
      case LineKind::Added: out += "+"; break;
      case LineKind::Removed: out += "-"; break;
      case LineKind::Context: out += " "; break;
    }
    out += line.text;
    out += "\n";
    if (const auto it = by_line.find(l); it != by_line.end()) {
      for (const Substitution* s : it->second) {
        out += "    [counterfactual] ";
        out += s->original;
        out += " -> ";
        out += s->replacement;
        out += "\n";
      }
    }
  }
  return out;
}

}  // namespace perfpred
