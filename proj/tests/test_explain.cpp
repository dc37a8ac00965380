// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "perfpred/bow.hpp"
#include "perfpred/corpus.hpp"
#include "perfpred/diff.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/explain.hpp"
#include "perfpred/labeler.hpp"
#include "perfpred/rng.hpp"
#include "perfpred/trees.hpp"

using namespace perfpred;

namespace {

RenderedChange make_change(std::vector<std::pair<LineKind, std::string>> lines,
                           std::string name = "apply_update") {
  RenderedChange change;
  change.function_name = std::move(name);
  change.context_width = 1;
  for (auto& [kind, text] : lines) change.lines.push_back({kind, std::move(text)});
  return change;
}

/// The call token of a line like "    name(args)", or "" when absent.
std::string call_token_of(const std::string& text) {
  const auto sites = find_sites(make_change({{LineKind::Added, text}}));
  return sites.empty() ? std::string() : sites[0].token;
}

}  // namespace

TEST_CASE("call and import sites are located with exact spans", "[explain]") {
  const RenderedChange change = make_change({
      {LineKind::Context, "def handle_fetch_request(ctx, payload):"},
      {LineKind::Context, "    # refresh blob cache"},
      {LineKind::Context, "    payload = cache_get(ctx, key)"},
      {LineKind::Added, "    for entry in vault_items:"},
      {LineKind::Added, "        scanfull_vault_amber(entry)"},
      {LineKind::Context, "    import functools"},
      {LineKind::Context, "    from collections import defaultdict"},
      {LineKind::Context, "    obj.refresh_handle(payload)"},
      {LineKind::Context, "    if ctx.debug_mode:"},
      {LineKind::Context, "        return (payload)"},
  });

  const std::vector<PerturbationSite> sites = find_sites(change);
  REQUIRE(sites.size() == 5);

  CHECK(sites[0].line == 2);
  CHECK(sites[0].kind == SiteKind::Call);
  CHECK(sites[0].token == "cache_get");

  CHECK(sites[1].line == 4);
  CHECK(sites[1].kind == SiteKind::Call);
  CHECK(sites[1].token == "scanfull_vault_amber");

  CHECK(sites[2].line == 5);
  CHECK(sites[2].kind == SiteKind::Import);
  CHECK(sites[2].token == "functools");

  CHECK(sites[3].line == 6);
  CHECK(sites[3].kind == SiteKind::Import);
  CHECK(sites[3].token == "collections");

  CHECK(sites[4].line == 7);
  CHECK(sites[4].kind == SiteKind::Call);
  CHECK(sites[4].token == "refresh_handle");

  for (const PerturbationSite& site : sites) {
    REQUIRE(site.end > site.begin);
    CHECK(change.lines[site.line].text.substr(site.begin, site.end - site.begin) == site.token);
  }
  CHECK(std::is_sorted(sites.begin(), sites.end(),
                       [](const PerturbationSite& a, const PerturbationSite& b) {
                         return std::tie(a.line, a.begin) < std::tie(b.line, b.begin);
                       }));
}

TEST_CASE("lines without calls or imports yield no sites", "[explain]") {
  const RenderedChange change = make_change({
      {LineKind::Context, "    value = alpha + beta"},
      {LineKind::Added, "    total = (alpha + beta) * 2"},
      {LineKind::Removed, "    while count < limit:"},
      {LineKind::Context, "    return total"},
  });
  CHECK(find_sites(change).empty());

  CHECK(call_token_of("    nested = outer_fn(inner_fn(x))") == "outer_fn");
  CHECK(call_token_of("    # comment_like(x)") == "comment_like");  // sites are lexical
  CHECK(call_token_of("    spaced (x)").empty());                   // '(' must be adjacent
}

TEST_CASE("site count equals the number of planted call lines", "[explain]") {
  for (std::size_t k = 1; k <= 5; ++k) {
    std::vector<std::pair<LineKind, std::string>> lines;
    lines.emplace_back(LineKind::Context, "    result = 0");
    for (std::size_t i = 0; i < k; ++i)
      lines.emplace_back(LineKind::Added, "    probe_" + std::to_string(i) + "(result)");
    lines.emplace_back(LineKind::Context, "    return result");

    const auto sites = find_sites(make_change(std::move(lines)));
    REQUIRE(sites.size() == k);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(sites[i].kind == SiteKind::Call);
      CHECK(sites[i].token == "probe_" + std::to_string(i));
    }
  }
}

TEST_CASE("planted corpus changes expose the heavy call as a site", "[explain]") {
  CorpusParams params;
  params.n_functions = 120;
  params.n_releases = 40;
  params.changes_per_release = 30;
  params.seed = 97;
  const Corpus corpus = generate_corpus(params);

  const std::set<std::string> heavy_verbs = {"scanfull", "rebuild",  "recompute",
                                             "crawl",    "resample", "reindex"};
  std::size_t checked = 0;
  for (const ChangeRecord& rec : corpus.changes) {
    if (rec.edit_kind != "plant_loop_call" && rec.edit_kind != "plant_call_swap") continue;
    const auto change =
        render_change(rec.diff, rec.index_before, rec.index_after, rec.function_name, 2);
    REQUIRE(change.has_value());
    bool heavy_site_on_added_line = false;
    for (const PerturbationSite& site : find_sites(*change)) {
      const std::string verb = site.token.substr(0, site.token.find('_'));
      if (change->lines[site.line].kind == LineKind::Added && heavy_verbs.count(verb))
        heavy_site_on_added_line = true;
    }
    CHECK(heavy_site_on_added_line);
    if (++checked >= 10) break;
  }
  REQUIRE(checked >= 5);
}

TEST_CASE("generator counts corpus frequencies and proposes by rank", "[explain]") {
  std::vector<RenderedChange> train;
  auto add_call_lines = [&](const std::string& token, std::size_t times, LineKind kind) {
    for (std::size_t i = 0; i < times; ++i)
      train.push_back(make_change({{kind, "    " + token + "(ctx)"}}));
  };
  add_call_lines("alpha_fetch", 4, LineKind::Added);
  add_call_lines("beta_scan", 3, LineKind::Context);
  add_call_lines("gamma_load", 2, LineKind::Removed);
  add_call_lines("delta_sync", 1, LineKind::Added);
  train.push_back(make_change({{LineKind::Context, "import numpy"}}));
  train.push_back(make_change({{LineKind::Added, "import numpy"}}));
  train.push_back(make_change({{LineKind::Context, "import json"}}));

  const auto generator = CorpusFrequencyGenerator::fit(train);
  REQUIRE(generator.fitted());
  CHECK(generator.counts(SiteKind::Call).at("alpha_fetch") == 4);
  CHECK(generator.counts(SiteKind::Call).at("delta_sync") == 1);
  CHECK(generator.counts(SiteKind::Import).at("numpy") == 2);

  PerturbationSite call_site;
  call_site.kind = SiteKind::Call;
  call_site.token = "epsilon_misc";
  CHECK(propose(call_site, generator, 3) ==
        std::vector<std::string>{"alpha_fetch", "beta_scan", "gamma_load"});

  call_site.token = "alpha_fetch";  // the original never proposes itself
  CHECK(propose(call_site, generator, 3) ==
        std::vector<std::string>{"beta_scan", "gamma_load", "delta_sync"});
  CHECK(propose(call_site, generator, 0).empty());

  PerturbationSite import_site;
  import_site.kind = SiteKind::Import;
  import_site.token = "numpy";
  CHECK(propose(import_site, generator, 5) == std::vector<std::string>{"json"});

  // Every proposal is a token observed in the train corpus at the same kind.
  call_site.token = "unseen_original";
  for (const std::string& token : propose(call_site, generator, 10))
    CHECK(generator.counts(SiteKind::Call).count(token) == 1);

  SECTION("frequency ties rank alphabetically") {
    const auto tied = CorpusFrequencyGenerator::from_counts({{"x_call", 2}, {"a_call", 2}}, {});
    PerturbationSite site;
    site.kind = SiteKind::Call;
    site.token = "zz";
    CHECK(propose(site, tied, 2) == std::vector<std::string>{"a_call", "x_call"});
  }

  SECTION("an unfitted generator refuses to propose") {
    const CorpusFrequencyGenerator unfitted;
    PerturbationSite site;
    site.kind = SiteKind::Call;
    site.token = "any";
    CHECK_THROWS_AS(propose(site, unfitted, 3), DataError);
  }
}

TEST_CASE("substitutions rewrite exact spans and nothing else", "[explain]") {
  const RenderedChange change = make_change({
      {LineKind::Context, "    before = untouched_line"},
      {LineKind::Added, "    cache_get(cache_get(key))"},
      {LineKind::Context, "    after = untouched_line"},
  });
  const auto sites = find_sites(change);
  REQUIRE(sites.size() == 2);
  REQUIRE(sites[0].token == "cache_get");
  REQUIRE(sites[1].token == "cache_get");

  const std::vector<Substitution> subs = {
      {sites[0], "cache_get", "alpha"},
      {sites[1], "cache_get", "beta_longer"},
  };
  const RenderedChange edited = apply_substitutions(change, subs);
  CHECK(edited.lines[0].text == change.lines[0].text);
  CHECK(edited.lines[1].text == "    alpha(beta_longer(key))");
  CHECK(edited.lines[2].text == change.lines[2].text);
  CHECK(edited.function_name == change.function_name);

  // Order of the substitution list does not matter.
  const std::vector<Substitution> reversed = {subs[1], subs[0]};
  CHECK(apply_substitutions(change, reversed).lines[1].text == edited.lines[1].text);

  SECTION("a stale span is rejected") {
    Substitution bad = subs[0];
    bad.site.begin += 1;
    bad.site.end += 1;
    CHECK_THROWS_AS(apply_substitutions(change, {bad}), DataError);

    Substitution out_of_range = subs[0];
    out_of_range.site.line = 99;
    CHECK_THROWS_AS(apply_substitutions(change, {out_of_range}), DataError);
  }
}

TEST_CASE("a trained model's positive prediction flips via one plausible edit", "[explain]") {
  // Train corpus: the "slowscan_probe" call marks regressions; two cheap
  // calls mark benign changes.  The shared context line appears everywhere.
  std::vector<RenderedChange> train;
  std::vector<char> labels;
  for (int i = 0; i < 40; ++i) {
    train.push_back(make_change({
        {LineKind::Added, "    slowscan_probe(entry)"},
        {LineKind::Context, "    emit_metrics(ctx)"},
    }));
    labels.push_back(1);
  }
  for (int i = 0; i < 60; ++i) {
    const std::string call = (i % 2 == 0) ? "cachefetch_tiny" : "formatjson_blob";
    train.push_back(make_change({
        {LineKind::Added, "    " + call + "(entry)"},
        {LineKind::Context, "    emit_metrics(ctx)"},
    }));
    labels.push_back(0);
  }

  std::vector<TokenMultiset> documents;
  for (const RenderedChange& c : train) documents.push_back(tokenize_change(c));
  const Vocabulary vocabulary = Vocabulary::build(documents);
  const Bm25Params bm25 = Bm25Params::fit(vocabulary, documents);
  const SparseMatrix x = vectorize_all(vocabulary, bm25, documents);

  RandomForestParams forest_params;
  forest_params.n_estimators = 200;
  forest_params.seed = 7;
  const ForestModel model = train_random_forest(x, labels, forest_params);
  const ChangeScorer scorer = make_bow_scorer(vocabulary, bm25, model);

  const auto generator = CorpusFrequencyGenerator::fit(train);
  const RenderedChange target = make_change({
      {LineKind::Context, "def apply_update(ctx):"},
      {LineKind::Added, "    slowscan_probe(entry)"},
      {LineKind::Context, "    emit_metrics(ctx)"},
  });

  ExplainConfig config;
  config.threshold = 0.5;
  config.max_edits = 3;
  config.k_per_site = 5;

  const double original = scorer(target);
  REQUIRE(original > config.threshold);

  const auto cf = greedy_search(scorer, generator, target, config);
  REQUIRE(cf.has_value());
  CHECK(cf->original_score == original);
  CHECK(cf->threshold == config.threshold);
  CHECK(cf->flipped_score <= config.threshold);
  REQUIRE(cf->substitutions.size() == 1);
  CHECK(cf->substitutions[0].original == "slowscan_probe");
  CHECK(generator.counts(SiteKind::Call).count(cf->substitutions[0].replacement) == 1);

  // Everything but the substituted span survives byte-identically.
  const RenderedChange flipped = apply_substitutions(target, cf->substitutions);
  CHECK(scorer(flipped) == cf->flipped_score);
  for (std::size_t l = 0; l < target.lines.size(); ++l) {
    if (l == cf->substitutions[0].site.line) {
      const PerturbationSite& site = cf->substitutions[0].site;
      std::string expected = target.lines[l].text;
      expected.replace(site.begin, site.end - site.begin, cf->substitutions[0].replacement);
      CHECK(flipped.lines[l].text == expected);
    } else {
      CHECK(flipped.lines[l].text == target.lines[l].text);
    }
  }

  // Deterministic end to end.
  const auto again = greedy_search(scorer, generator, target, config);
  REQUIRE(again.has_value());
  CHECK(*again == *cf);

  const std::string report = format_counterfactual(target, *cf);
  CHECK(report.find("slowscan_probe -> " + cf->substitutions[0].replacement) !=
        std::string::npos);
  CHECK(report.find("+    slowscan_probe(entry)") != std::string::npos);

  SECTION("a benign prediction is not explainable") {
    const RenderedChange benign = make_change({
        {LineKind::Added, "    cachefetch_tiny(entry)"},
        {LineKind::Context, "    emit_metrics(ctx)"},
    });
    REQUIRE(scorer(benign) <= config.threshold);
    CHECK_THROWS_AS(greedy_search(scorer, generator, benign, config), DataError);
  }
}

namespace {

/// Scorer driven by which replacement tokens appear anywhere in the change
/// text; the score table is keyed by the set of planted markers present.
ChangeScorer subset_table_scorer(std::map<std::set<std::string>, double> table,
                                 std::vector<std::string> markers) {
  return [table = std::move(table), markers = std::move(markers)](const RenderedChange& c) {
    std::set<std::string> present;
    for (const LinePatch& line : c.lines)
      for (const std::string& m : markers)
        if (line.text.find(m) != std::string::npos) present.insert(m);
    return table.at(present);
  };
}

}  // namespace

TEST_CASE("pruning drops substitutions made redundant by later edits", "[explain]") {
  const RenderedChange change = make_change({
      {LineKind::Added, "    orig_one(x)"},
      {LineKind::Added, "    orig_two(x)"},
      {LineKind::Added, "    orig_three(x)"},
  });
  const auto generator =
      CorpusFrequencyGenerator::from_counts({{"cfa", 3}, {"cfb", 2}, {"cfc", 1}}, {});

  // Non-additive landscape: greedy walks a -> a,c -> a,c,b; the flip then
  // survives without "a", so pruning must strip it.
  const ChangeScorer scorer = subset_table_scorer(
      {
          {{}, 0.8},
          {{"cfa"}, 0.7},
          {{"cfb"}, 0.75},
          {{"cfc"}, 0.72},
          {{"cfa", "cfb"}, 0.65},
          {{"cfa", "cfc"}, 0.62},
          {{"cfb", "cfc"}, 0.48},
          {{"cfa", "cfb", "cfc"}, 0.45},
      },
      {"cfa", "cfb", "cfc"});

  ExplainConfig config;
  config.threshold = 0.5;
  config.max_edits = 4;
  config.k_per_site = 3;

  const auto cf = greedy_search(scorer, generator, change, config);
  REQUIRE(cf.has_value());
  CHECK(cf->original_score == 0.8);
  CHECK(cf->flipped_score == 0.48);
  REQUIRE(cf->substitutions.size() == 2);
  CHECK(cf->substitutions[0].original == "orig_two");
  CHECK(cf->substitutions[0].replacement == "cfc");
  CHECK(cf->substitutions[1].original == "orig_three");
  CHECK(cf->substitutions[1].replacement == "cfb");

  // 1-minimality: removing either remaining substitution loses the flip.
  for (std::size_t i = 0; i < cf->substitutions.size(); ++i) {
    std::vector<Substitution> subset;
    for (std::size_t j = 0; j < cf->substitutions.size(); ++j)
      if (j != i) subset.push_back(cf->substitutions[j]);
    CHECK(scorer(apply_substitutions(change, subset)) > config.threshold);
  }
}

TEST_CASE("greedy matches exhaustive search on additive two-site instances", "[explain]") {
  const RenderedChange change = make_change({
      {LineKind::Added, "    orig_one(x)"},
      {LineKind::Added, "    orig_two(x)"},
  });
  const std::vector<std::string> pool = {"cfa", "cfb", "cfc"};
  const auto generator =
      CorpusFrequencyGenerator::from_counts({{"cfa", 3}, {"cfb", 2}, {"cfc", 1}}, {});

  ExplainConfig config;
  config.threshold = 0.5;
  config.max_edits = 2;
  config.k_per_site = 3;

  std::size_t flipped_cases = 0, unflippable_cases = 0;
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    // Additive effects: each (site, token) pair lowers the score by a fixed
    // amount, so greedy's per-step argmin is globally optimal and must agree
    // with exhaustive enumeration.
    Rng rng(derive_seed(2024, trial));
    double effect[2][3];
    for (auto& row : effect)
      for (double& e : row) e = rng.uniform(0.0, 0.28);

    auto score_of = [&](int tok_at_site0, int tok_at_site1) {  // -1 = original
      double s = 0.9;
      if (tok_at_site0 >= 0) s -= effect[0][tok_at_site0];
      if (tok_at_site1 >= 0) s -= effect[1][tok_at_site1];
      return std::max(0.05, s);
    };
    const ChangeScorer scorer = [&](const RenderedChange& c) {
      int at[2] = {-1, -1};
      for (int line = 0; line < 2; ++line)
        for (int t = 0; t < 3; ++t)
          if (c.lines[line].text.find(pool[t]) != std::string::npos) at[line] = t;
      return score_of(at[0], at[1]);
    };

    // Exhaustive: all 4 x 4 assignments, tracking the cheapest flip.
    bool exhaustive_flips = false;
    std::size_t optimal_edits = 3;
    for (int t0 = -1; t0 < 3; ++t0)
      for (int t1 = -1; t1 < 3; ++t1) {
        if (score_of(t0, t1) > config.threshold) continue;
        exhaustive_flips = true;
        const std::size_t edits = (t0 >= 0 ? 1 : 0) + (t1 >= 0 ? 1 : 0);
        optimal_edits = std::min(optimal_edits, edits);
      }

    std::optional<Counterfactual> cf;
    if (scorer(change) > config.threshold) {
      cf = greedy_search(scorer, generator, change, config);
    }
    CHECK(cf.has_value() == exhaustive_flips);
    if (cf) {
      ++flipped_cases;
      CHECK(cf->substitutions.size() >= optimal_edits);
      CHECK(cf->substitutions.size() <= config.max_edits);
      CHECK(cf->flipped_score <= config.threshold);
      for (std::size_t i = 0; i < cf->substitutions.size(); ++i) {
        std::vector<Substitution> subset;
        for (std::size_t j = 0; j < cf->substitutions.size(); ++j)
          if (j != i) subset.push_back(cf->substitutions[j]);
        CHECK(scorer(apply_substitutions(change, subset)) > config.threshold);
      }
    } else {
      ++unflippable_cases;
    }
  }
  // The random effect ranges make both outcomes reachable; require both so
  // the oracle genuinely exercises the two branches.
  CHECK(flipped_cases >= 5);
  CHECK(unflippable_cases >= 5);
}

TEST_CASE("search respects preconditions and budgets", "[explain]") {
  const RenderedChange change = make_change({{LineKind::Added, "    orig_one(x)"}});
  const auto generator = CorpusFrequencyGenerator::from_counts({{"cfa", 1}}, {});

  ExplainConfig config;
  config.threshold = 0.5;

  SECTION("a score at or below the threshold is not a positive prediction") {
    const ChangeScorer low = [](const RenderedChange&) { return 0.3; };
    CHECK_THROWS_AS(greedy_search(low, generator, change, config), DataError);
    const ChangeScorer at = [&](const RenderedChange&) { return config.threshold; };
    CHECK_THROWS_AS(greedy_search(at, generator, change, config), DataError);
  }

  SECTION("a zero edit budget never flips") {
    const ChangeScorer high = [](const RenderedChange&) { return 0.9; };
    config.max_edits = 0;
    CHECK_FALSE(greedy_search(high, generator, change, config).has_value());
  }

  SECTION("no candidates when the pool only contains the original token") {
    const auto self_only = CorpusFrequencyGenerator::from_counts({{"orig_one", 5}}, {});
    const ChangeScorer high = [](const RenderedChange&) { return 0.9; };
    CHECK_FALSE(greedy_search(high, self_only, change, config).has_value());
  }

  SECTION("a change without sites cannot be perturbed") {
    const RenderedChange no_sites = make_change({{LineKind::Added, "    value = 42"}});
    const ChangeScorer high = [](const RenderedChange&) { return 0.9; };
    CHECK_FALSE(greedy_search(high, generator, no_sites, config).has_value());
  }
}
