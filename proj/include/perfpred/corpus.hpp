// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic ground-truth corpus: a fleet of templated source functions, a
// release timeline of function-level diffs, and sampled GCPU series from the
// fleet simulator.  Planted regressions follow the expensive-call-in-a-loop
// motif and its relatives (call swap, dropped cache guard) and always change
// the cost model; benign edits (renames, comment tweaks, cheap-call churn)
// never do.  Hard negatives mimic regression token patterns: debug-guarded
// heavy calls and heavy calls added to never-invoked legacy code.
//
// Two deliberate timeline structures shape the learning problem the way
// production data behaves:
//   - regressions arrive in temporal clusters (one bad library rollout hits
//     several related functions within adjacent releases), and
//   - the heavy-callee vocabulary drifts across four "eras", so a model
//     evaluated on a random split sees tomorrow's tokens during training
//     while a chronological split does not.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "perfpred/diff.hpp"
#include "perfpred/errors.hpp"
#include "perfpred/fleetsim.hpp"
#include "perfpred/rng.hpp"

namespace perfpred {

struct CorpusParams {
  std::size_t n_functions = 400;
  std::size_t n_releases = 200;
  std::size_t changes_per_release = 100;
  double regression_rate = 0.007;

  // Sampling.  The batch is large enough that a typical function's share
  // lands a handful of snapshot hits per interval; scarcer functions would
  // show pure-Poisson jitter (cv > 1) and be eaten by the stability filter.
  double interval = 1.0;
  std::size_t ticks_per_release = 12;
  std::size_t batch_size = 4000;
  double rate_noise_sigma = 0.04;
  double flappy_sigma = 1.5;       // noise for deliberately unstable functions
  double flappy_fraction = 0.03;

  // Edit mix.
  double phantom_fraction = 0.05;  // changes whose diff carries no hunks
  double confuser_fraction = 0.20; // of benign edits

  // Label calibration: planted cost factors are solved so the victim's
  // inclusive share moves by at least margin * threshold.
  double label_threshold = 0.0025;
  double threshold_margin = 2.2;

  std::size_t n_eras = 4;
  std::size_t diff_context = 8;
  std::uint64_t seed = 42;

  std::size_t n_changes() const { return n_releases * changes_per_release; }
};

struct PlantedEffect {
  std::string function_name;
  double factor = 1.0;

  bool operator==(const PlantedEffect&) const = default;
};

struct ReleaseSpec {
  std::size_t release_id = 0;  // 1-based; 0 is the pre-release baseline
  double timestamp = 0.0;
  std::vector<std::string> change_ids;
  std::vector<PlantedEffect> planted_effects;  // plants introduced here

  bool operator==(const ReleaseSpec&) const = default;
};

struct ChangeRecord {
  std::string change_id;
  std::size_t release_id = 0;
  double release_timestamp = 0.0;
  std::string function_name;
  std::string file_path;
  std::string team;
  int tenure_class = 1;
  UnifiedDiff diff;  // no hunks for phantom (metadata-only) changes
  std::vector<FunctionIndexEntry> index_before;
  std::vector<FunctionIndexEntry> index_after;
  // Ground truth.
  bool planted = false;
  double factor = 1.0;
  std::string edit_kind;

  bool operator==(const ChangeRecord&) const = default;
};

struct Corpus {
  CorpusParams params;
  std::vector<ReleaseSpec> releases;
  std::vector<ChangeRecord> changes;
  std::map<std::string, GcpuSeries> series;
  CostModel base_model;
  double end_time = 0.0;
};

namespace detail {

// ---------------------------------------------------------------------------
// Word pools.  Small on purpose: the induced vocabulary stays in the hundreds
// so desk-scale forests train in seconds.

inline const std::vector<std::string>& name_verbs() {
  static const std::vector<std::string> v = {
      "handle", "process", "render", "sync",  "merge",  "batch", "queue",  "parse",
      "route",  "score",   "audit",  "prune", "fold",   "index", "digest", "mirror",
      "stage",  "bundle",  "patch",  "trace", "shard",  "rank",  "drain",  "splice"};
  return v;
}

inline const std::vector<std::string>& name_nouns() {
  static const std::vector<std::string> v = {
      "orders",  "sessions", "carts",   "invoices",  "profiles", "tickets",
      "feeds",   "quotas",   "alerts",  "batches",   "ledgers",  "tokens",
      "reports", "segments", "baskets", "shipments", "refunds",  "coupons",
      "streams", "caches",   "plans",   "offers",    "drafts",   "folders",
      "ratings", "events",   "badges",  "notices",   "uploads",  "receipts"};
  return v;
}

inline const std::vector<std::string>& cheap_callees() {
  static const std::vector<std::string> v = {
      "load_row",      "fetch_blob",   "trim_text",    "format_label", "cache_get",
      "lookup_code",   "map_fields",   "count_items",  "strip_tags",   "pick_slot",
      "read_flag",     "write_mark",   "tally_hits",   "clamp_range",  "split_key",
      "join_parts",    "mask_value",   "swap_pair",    "grab_handle",  "emit_ping",
      "pack_tuple",    "seek_entry",   "peek_status",  "touch_stamp",  "scrub_field",
      "wrap_payload",  "bind_socket",  "drop_hint",    "mark_seen",    "flip_toggle",
      "copy_header",   "snap_cursor",  "list_keys",    "sum_counts",   "get_locale",
      "probe_cache"};
  return v;
}

inline const std::vector<std::string>& cold_callees() {
  static const std::vector<std::string> v = {
      "migrate_rows",   "backfill_column", "rewrite_schema", "dump_archive",
      "restore_backup", "purge_orphans",   "convert_legacy", "verify_checksum"};
  return v;
}

inline const std::vector<std::string>& heavy_verbs() {
  static const std::vector<std::string> v = {"scanfull", "rebuild",  "recompute",
                                             "crawl",    "resample", "reindex"};
  return v;
}

// Era-specific vocabulary for heavy callees: the stem verbs stay stable, the
// object and era marker rotate, so chronological evaluation faces genuinely
// unseen names built from partly familiar parts.
inline const std::vector<std::string>& era_words() {
  static const std::vector<std::string> v = {"amber", "cobalt", "sierra", "umbra",
                                             "vermil", "onyx"};
  return v;
}

inline const std::vector<std::vector<std::string>>& era_nouns() {
  static const std::vector<std::vector<std::string>> v = {
      {"vault", "census", "lattice", "orchard", "mosaic"},
      {"harbor", "compass", "granary", "prism", "meadow"},
      {"quarry", "beacon", "terrace", "atlas", "grove"},
      {"summit", "canopy", "cistern", "parapet", "delta"},
      {"estuary", "bastion", "arbor", "villa", "crag"},
      {"plateau", "gully", "spire", "marsh", "knoll"}};
  return v;
}

inline const std::vector<std::string>& var_pool() {
  static const std::vector<std::string> v = {"payload", "bundle",  "result", "summary",
                                             "snapshot", "digestv", "packet", "record",
                                             "outcome",  "holder"};
  return v;
}

inline const std::vector<std::string>& comment_words() {
  static const std::vector<std::string> v = {"warm",    "staged", "ranked", "merged",
                                             "filtered", "padded", "sorted", "sampled",
                                             "batched",  "cached", "split",  "rolled"};
  return v;
}

inline const std::vector<std::string>& team_names() {
  static const std::vector<std::string> v = {
      "checkout", "payments", "search",   "ads",       "infra",    "storage",
      "mobile",   "growth",   "trust",    "messaging", "media",    "identity",
      "platform", "billing",  "commerce", "analytics", "delivery", "maps"};
  return v;
}

// ---------------------------------------------------------------------------

enum class FnKind { Handler, Helper, Util, Cold };

struct FnSpec {
  std::string name;
  FnKind kind = FnKind::Helper;
  std::string team;
  std::size_t file_id = 0;
  std::string collection = "items";
  std::size_t v1 = 0, v2 = 1;  // base indices into var_pool
  std::vector<std::string> callees;
  bool has_loop = false;
  bool has_guard = false;
  std::size_t loop_body = 2;  // 2..3 baseline loop statements

  // Mutable decoration driven by edits.
  int rename_salt = 0;
  int comment_salt = 0;
  bool guard_removed = false;
  int swap_slot = -1;
  std::string swap_callee;
  std::vector<std::string> extra_calls;
  std::string heavy;  // empty = no heavy call present
  std::size_t heavy_pos = 0;
  bool heavy_guarded = false;
  double factor = 1.0;

  std::string var1() const {
    return var_pool()[(v1 + std::size_t(rename_salt)) % var_pool().size()];
  }
  std::string var2() const {
    return var_pool()[(v2 + std::size_t(rename_salt)) % var_pool().size()];
  }
  // True while a revertable edit (heavy call, dropped guard, call swap from a
  // plant) is active; ordinary benign edits commit into the spec instead.
  bool decorated() const { return !heavy.empty() || swap_slot >= 0 || guard_removed; }
};

inline std::vector<std::string> render_function(const FnSpec& f) {
  std::vector<std::string> lines;
  lines.push_back("def " + f.name + "(ctx, " + f.collection + "):");
  lines.push_back("    # " +
                  comment_words()[std::size_t(f.comment_salt) % comment_words().size()] +
                  " pass over " + f.collection);
  lines.push_back("    " + f.var1() + " = " + f.callees[0] + "(ctx)");
  if (f.has_guard && !f.guard_removed) {
    lines.push_back("    if " + f.var1() + " is None:");
    lines.push_back("        return default_payload(ctx)");
  }
  for (std::size_t k = 1; k < f.callees.size(); ++k) {
    const std::string& callee =
        (f.swap_slot == int(k - 1) && !f.swap_callee.empty()) ? f.swap_callee : f.callees[k];
    const std::string arg = k == 1 ? f.var1() : f.var2();
    lines.push_back("    " + f.var2() + " = " + callee + "(" + arg + ")");
  }
  for (const std::string& call : f.extra_calls)
    lines.push_back("    " + call + "(" + f.var2() + ")");
  if (f.has_loop) {
    std::vector<std::string> body;
    body.push_back("        entry = normalize_entry(entry)");
    body.push_back("        update_totals(entry, " + f.var2() + ")");
    if (f.loop_body >= 3) body.push_back("        append_outcome(entry)");
    if (!f.heavy.empty()) {
      const std::size_t at = std::min(f.heavy_pos, body.size());
      if (f.heavy_guarded) {
        body.insert(body.begin() + std::ptrdiff_t(at),
                    {"        if ctx.debug_mode:", "            " + f.heavy + "(entry)"});
      } else {
        body.insert(body.begin() + std::ptrdiff_t(at), "        " + f.heavy + "(entry)");
      }
    }
    lines.push_back("    for entry in " + f.collection + ":");
    lines.insert(lines.end(), body.begin(), body.end());
  } else if (!f.heavy.empty()) {
    if (f.heavy_guarded) {
      lines.push_back("    if ctx.debug_mode:");
      lines.push_back("        " + f.heavy + "(" + f.var1() + ")");
    } else {
      lines.push_back("    " + f.heavy + "(" + f.var1() + ")");
    }
  }
  lines.push_back("    emit_metrics(ctx, " + f.var1() + ")");
  lines.push_back("    return " + f.var2());
  return lines;
}

// ---------------------------------------------------------------------------
// Minimal-diff construction between two file revisions (LCS over the changed
// middle, fixed context width).  The generator validates every diff it emits
// by replaying it.

inline UnifiedDiff make_file_diff(const std::vector<std::string>& before,
                                  const std::vector<std::string>& after,
                                  const std::string& path, std::size_t context) {
  std::size_t prefix = 0;
  while (prefix < before.size() && prefix < after.size() && before[prefix] == after[prefix])
    ++prefix;
  std::size_t suffix = 0;
  while (suffix < before.size() - prefix && suffix < after.size() - prefix &&
         before[before.size() - 1 - suffix] == after[after.size() - 1 - suffix])
    ++suffix;
  const std::size_t n = before.size() - prefix - suffix;
  const std::size_t m = after.size() - prefix - suffix;
  if (n == 0 && m == 0) throw DataError("make_file_diff: revisions are identical");

  // LCS table over the middle block.
  std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      dp[i][j] = before[prefix + i] == after[prefix + j]
                     ? dp[i + 1][j + 1] + 1
                     : std::max(dp[i + 1][j], dp[i][j + 1]);

  Hunk hunk;
  const std::size_t ctx_before = std::min(context, prefix);
  const std::size_t ctx_after = std::min(context, suffix);
  hunk.old_start = prefix - ctx_before + 1;
  hunk.new_start = prefix - ctx_before + 1;
  for (std::size_t k = prefix - ctx_before; k < prefix; ++k)
    hunk.lines.push_back({LineKind::Context, before[k]});
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && before[prefix + i] == after[prefix + j]) {
      hunk.lines.push_back({LineKind::Context, before[prefix + i]});
      ++i;
      ++j;
    } else if (i < n && (j == m || dp[i + 1][j] >= dp[i][j + 1])) {
      hunk.lines.push_back({LineKind::Removed, before[prefix + i]});
      ++i;
    } else {
      hunk.lines.push_back({LineKind::Added, after[prefix + j]});
      ++j;
    }
  }
  for (std::size_t k = 0; k < ctx_after; ++k)
    hunk.lines.push_back({LineKind::Context, before[before.size() - suffix + k]});

  UnifiedDiff diff;
  diff.file_path = path;
  diff.hunks.push_back(std::move(hunk));
  return diff;
}

// ---------------------------------------------------------------------------

struct SourceFile {
  std::string path;
  std::vector<std::size_t> fn_ids;
};

struct GeneratorState {
  CorpusParams params;
  std::vector<FnSpec> fns;
  std::vector<SourceFile> files;
  CostModel base_model;
  std::map<std::string, double> self_share;  // baseline self-time fraction
  double total_self_time = 0.0;
  std::map<std::string, double> incl_numerator;  // inv * inclusive cost per invocation
  std::set<std::string> flappy;
  SamplingNoise noise;
};

inline std::vector<std::string> build_file_lines(const GeneratorState& st, std::size_t file_id,
                                                 std::vector<FunctionIndexEntry>* index,
                                                 const std::string& revision) {
  const SourceFile& file = st.files[file_id];
  std::vector<std::string> lines;
  lines.push_back("# module " + file.path);
  lines.push_back("");
  for (std::size_t k = 0; k < file.fn_ids.size(); ++k) {
    const FnSpec& fn = st.fns[file.fn_ids[k]];
    const std::vector<std::string> body = render_function(fn);
    if (index)
      index->push_back({revision, file.path, fn.name,
                        lines.size() + 1, lines.size() + body.size()});
    lines.insert(lines.end(), body.begin(), body.end());
    if (k + 1 < file.fn_ids.size()) lines.push_back("");
  }
  return lines;
}

inline std::string heavy_name(std::size_t era, std::size_t verb, std::size_t noun) {
  return heavy_verbs()[verb % heavy_verbs().size()] + "_" +
         era_nouns()[era][noun % era_nouns()[era].size()] + "_" + era_words()[era];
}

/// Cost factor that moves the function's inclusive share by at least `delta`,
/// solved in closed form from the baseline flow (only the self cost scales).
inline double solve_factor(const GeneratorState& st, const std::string& name, double delta) {
  const double t0 = st.total_self_time;
  const double n0 = st.incl_numerator.at(name);
  const double a = st.self_share.at(name) * t0;  // inv * self_cost
  const double s0 = n0 / t0;
  const double target = s0 + delta;
  if (a <= 0.0 || target >= 1.0) return 0.0;
  const double x = (target * t0 - n0) / (a * (1.0 - target));
  if (x <= 0.0) return 0.0;
  return 1.0 + x;
}

}  // namespace detail

/// Deterministic synthetic corpus: releases, per-change diffs with function
/// indexes and author metadata, sampled GCPU series, and ground truth.
inline Corpus generate_corpus(const CorpusParams& params = {}) {
  if (params.regression_rate <= 0.0 || params.regression_rate >= 1.0)
    throw ConfigError("generate_corpus: regression_rate must be in (0, 1)");
  if (params.n_functions < 20) throw ConfigError("generate_corpus: need at least 20 functions");
  if (params.n_releases < params.n_eras)
    throw ConfigError("generate_corpus: need at least one release per era");
  if (params.changes_per_release >= params.n_functions)
    throw ConfigError("generate_corpus: changes_per_release must be < n_functions");

  using namespace detail;
  const Rng root(params.seed);
  GeneratorState st;
  st.params = params;

  // --- Function population -------------------------------------------------
  {
    Rng rng = root.fork(1);
    const auto& verbs = name_verbs();
    const auto& nouns = name_nouns();
    std::vector<std::pair<std::size_t, std::size_t>> combos;
    for (std::size_t v = 0; v < verbs.size(); ++v)
      for (std::size_t o = 0; o < nouns.size(); ++o) combos.emplace_back(v, o);
    rng.shuffle(combos);
    if (combos.size() < params.n_functions)
      throw ConfigError("generate_corpus: name pool too small for n_functions");

    const std::size_t n = params.n_functions;
    const std::size_t n_cold = n / 10;
    const std::size_t n_util = n / 4;
    const std::size_t n_handler = n / 4;

    const auto& teams = team_names();
    for (std::size_t i = 0; i < n; ++i) {
      FnSpec f;
      const auto [v, o] = combos[i];
      if (i < n_cold) {
        f.kind = FnKind::Cold;
        f.name = "legacy_" + verbs[v] + "_" + nouns[o];
      } else if (i < n_cold + n_util) {
        f.kind = FnKind::Util;
        f.name = verbs[v] + "_" + nouns[o] + "_step";
      } else if (i < n_cold + n_util + n_handler) {
        f.kind = FnKind::Handler;
        f.name = "handle_" + verbs[v] + "_" + nouns[o];
      } else {
        f.kind = FnKind::Helper;
        f.name = verbs[v] + "_" + nouns[o];
      }
      // Perf-sensitive teams (the first five) own 60% of hot code.
      if (f.kind == FnKind::Handler || f.kind == FnKind::Helper) {
        f.team = rng.bernoulli(0.6) ? teams[rng.below(5)] : teams[5 + rng.below(teams.size() - 5)];
      } else {
        f.team = teams[rng.below(teams.size())];
      }
      f.collection = rng.bernoulli(0.5) ? "items" : "rows";
      f.v1 = rng.below(var_pool().size());
      f.v2 = (f.v1 + 1 + rng.below(var_pool().size() - 1)) % var_pool().size();
      const auto& pool = f.kind == FnKind::Cold ? cold_callees() : cheap_callees();
      const std::size_t n_callees = 2 + rng.below(3);  // opener + 1..3 fillers
      for (std::size_t k = 0; k < n_callees; ++k)
        f.callees.push_back(pool[rng.below(pool.size())]);
      switch (f.kind) {
        case FnKind::Handler: f.has_loop = rng.bernoulli(0.85); break;
        case FnKind::Helper: f.has_loop = rng.bernoulli(0.70); break;
        case FnKind::Util: f.has_loop = rng.bernoulli(0.30); break;
        case FnKind::Cold: f.has_loop = rng.bernoulli(0.50); break;
      }
      f.has_guard = rng.bernoulli(0.45);
      f.loop_body = 2 + rng.below(2);
      st.fns.push_back(std::move(f));
    }

    // Files: group by (team, kind bucket), two to four functions per file.
    std::map<std::string, std::vector<std::size_t>> by_bucket;
    for (std::size_t i = 0; i < st.fns.size(); ++i) {
      const FnSpec& f = st.fns[i];
      const char* base = f.kind == FnKind::Cold     ? "migrations/"
                         : f.kind == FnKind::Util   ? "services/"
                         : f.kind == FnKind::Helper ? "services/"
                                                    : "services/";
      const char* leaf = f.kind == FnKind::Cold     ? "cleanup"
                         : f.kind == FnKind::Util   ? "util"
                         : f.kind == FnKind::Helper ? "helpers"
                                                    : "handlers";
      by_bucket[std::string(base) + f.team + "/" + leaf].push_back(i);
    }
    for (const auto& [bucket, ids] : by_bucket) {
      std::size_t at = 0;
      std::size_t part = 0;
      while (at < ids.size()) {
        const std::size_t take = std::min<std::size_t>(2 + rng.below(3), ids.size() - at);
        SourceFile file;
        file.path = bucket + (part == 0 ? "" : "_" + std::to_string(part)) + ".py";
        for (std::size_t k = 0; k < take; ++k) {
          file.fn_ids.push_back(ids[at + k]);
          st.fns[ids[at + k]].file_id = st.files.size();
        }
        st.files.push_back(std::move(file));
        at += take;
        ++part;
      }
    }
  }

  // --- Cost model ------------------------------------------------------------
  {
    Rng rng = root.fork(2);
    CostModel& model = st.base_model;
    // Background runtime: stable bulk of the fleet so individual functions
    // hold small shares.
    double background = 0.0;
    for (int k = 0; k < 10; ++k) {
      const std::string name = "runtime_core_" + std::string(1, char('a' + k));
      const double cost = 20.0 + rng.uniform() * 30.0;
      const double weight = 40.0 + rng.uniform() * 40.0;
      model.self_cost[name] = cost;
      model.invocation_rate[name] = weight / cost;
      background += weight;
    }
    std::vector<std::size_t> utils;
    for (std::size_t i = 0; i < st.fns.size(); ++i) {
      const FnSpec& f = st.fns[i];
      double weight = 0.0;
      switch (f.kind) {
        case FnKind::Handler: weight = std::exp(rng.normal(std::log(1.6), 0.45)); break;
        case FnKind::Helper: weight = std::exp(rng.normal(std::log(1.1), 0.5)); break;
        case FnKind::Util: weight = std::exp(rng.normal(std::log(0.8), 0.5)); break;
        case FnKind::Cold: weight = 1e-6; break;
      }
      const double cost = 5.0 + rng.uniform() * 45.0;
      model.self_cost[f.name] = cost;
      model.invocation_rate[f.name] = weight / cost;
      if (f.kind == FnKind::Util) utils.push_back(i);
    }
    // Sparse call edges into utilities (callers are handlers/helpers); the
    // planted victims stay externally invoked so caller series are unaffected.
    std::vector<std::size_t> hot;
    for (std::size_t i = 0; i < st.fns.size(); ++i)
      if (st.fns[i].kind == FnKind::Handler || st.fns[i].kind == FnKind::Helper)
        hot.push_back(i);
    for (const std::size_t u : utils) {
      if (!rng.bernoulli(0.3)) continue;
      const std::size_t caller = hot[rng.below(hot.size())];
      model.calls[st.fns[caller].name].push_back(
          {st.fns[u].name, 0.25 + rng.uniform() * 1.75});
    }

    // Baseline flow for share bookkeeping and plant calibration.
    const FlowGraph g = build_flow_graph(model);
    const std::vector<double> inv = invocation_flow(g, g.base_rate);
    std::vector<double> incl(g.names.size(), 0.0);
    for (std::size_t v = g.names.size(); v-- > 0;) {
      incl[v] = g.self_cost[v];
      for (const auto& [to, cpi] : g.out_edges[v]) incl[v] += cpi * incl[to];
    }
    for (std::size_t v = 0; v < g.names.size(); ++v) {
      st.total_self_time += inv[v] * g.self_cost[v];
    }
    for (std::size_t v = 0; v < g.names.size(); ++v) {
      st.self_share[g.names[v]] = inv[v] * g.self_cost[v];
      st.incl_numerator[g.names[v]] = inv[v] * incl[v];
    }
    for (auto& [name, share] : st.self_share) share /= st.total_self_time;

    // Deliberately unstable functions exercise the stability filter.
    st.noise.rate_sigma = params.rate_noise_sigma;
    std::vector<std::size_t> flappy_pool = hot;
    rng.shuffle(flappy_pool);
    const auto n_flappy =
        static_cast<std::size_t>(std::llround(params.flappy_fraction * double(st.fns.size())));
    for (std::size_t k = 0; k < n_flappy && k < flappy_pool.size(); ++k) {
      const std::string& name = st.fns[flappy_pool[k]].name;
      st.flappy.insert(name);
      st.noise.per_function[name] = params.flappy_sigma;
    }
  }

  // --- Plant schedule ----------------------------------------------------------
  // Temporal clusters of regressions sharing one heavy callee and adjacent
  // releases; the callee vocabulary rotates per era.
  const double delta_target = params.threshold_margin * params.label_threshold;
  std::vector<std::size_t> eligible;  // victims: hot, stable, big enough share
  for (std::size_t i = 0; i < st.fns.size(); ++i) {
    const FnSpec& f = st.fns[i];
    if (f.kind != FnKind::Handler && f.kind != FnKind::Helper) continue;
    if (st.flappy.count(f.name)) continue;
    const double gamma = detail::solve_factor(st, f.name, delta_target);
    if (gamma > 1.0 && gamma <= 8.0) eligible.push_back(i);
  }
  if (eligible.size() < 20)
    throw DataError("generate_corpus: too few plantable functions; lower label_threshold");

  std::map<std::size_t, std::vector<std::pair<std::size_t, std::string>>> plant_schedule;
  {
    Rng rng = root.fork(3);
    const auto n_plants = static_cast<std::size_t>(
        std::llround(params.regression_rate * double(params.n_changes())));
    const std::size_t per_era = (n_plants + params.n_eras - 1) / params.n_eras;
    const std::size_t releases_per_era = params.n_releases / params.n_eras;
    std::size_t scheduled = 0;
    for (std::size_t era = 0; era < params.n_eras && scheduled < n_plants; ++era) {
      const std::size_t era_lo = era * releases_per_era + 1;
      const std::size_t era_hi =
          era + 1 == params.n_eras ? params.n_releases : (era + 1) * releases_per_era;
      std::size_t era_quota = std::min(per_era, n_plants - scheduled);
      while (era_quota > 0) {
        const std::size_t size = std::min<std::size_t>(3 + rng.below(4), era_quota);
        const std::string heavy =
            detail::heavy_name(era % era_words().size(), rng.below(heavy_verbs().size()),
                               rng.below(era_nouns()[era % era_nouns().size()].size()));
        const std::size_t span = 1 + rng.below(4);
        const std::size_t start =
            era_lo + rng.below(std::max<std::size_t>(1, era_hi - era_lo + 1 - span));
        std::vector<std::size_t> victims = eligible;
        rng.shuffle(victims);
        for (std::size_t k = 0; k < size; ++k) {
          const std::size_t release = start + rng.below(span);
          plant_schedule[release].emplace_back(victims[k % victims.size()], heavy);
        }
        era_quota -= size;
        scheduled += size;
      }
    }
  }

  // --- Release loop ---------------------------------------------------------
  Corpus corpus;
  corpus.params = params;
  corpus.base_model = st.base_model;
  const double release_period = double(params.ticks_per_release) * params.interval;

  // Pre-release baseline segment.
  {
    ReleaseSpec baseline;
    baseline.release_id = 0;
    baseline.timestamp = 0.0;
    corpus.releases.push_back(baseline);
  }

  Rng edit_rng = root.fork(4);
  std::map<std::string, GcpuSeries> series;
  for (const auto& [name, cost] : st.base_model.self_cost) series[name].function_name = name;

  const auto simulate_segment = [&](std::size_t release_id, double start_time) {
    CostModel model = st.base_model;
    for (const FnSpec& f : st.fns)
      if (f.factor != 1.0) model.self_cost[f.name] *= f.factor;
    const auto segment =
        simulate_sampling(model, release_period, params.interval, params.batch_size,
                          derive_seed(params.seed, 5000 + release_id), st.noise);
    for (const auto& [name, s] : segment) {
      auto& dst = series[name].samples;
      for (const auto& [t, g] : s.samples)
        dst.emplace_back(start_time + t - params.interval, g);
    }
  };
  simulate_segment(0, 0.0);

  std::size_t change_seq = 0;
  const std::size_t releases_per_era = params.n_releases / params.n_eras;
  for (std::size_t r = 1; r <= params.n_releases; ++r) {
    const std::size_t era =
        std::min(params.n_eras - 1, (r - 1) / std::max<std::size_t>(1, releases_per_era));
    ReleaseSpec release;
    release.release_id = r;
    release.timestamp = double(r) * release_period;

    // Who changes in this release: scheduled plants first, then benign fill.
    std::vector<std::pair<std::size_t, std::string>> plants;  // (fn, heavy name)
    std::set<std::size_t> in_release;
    if (const auto it = plant_schedule.find(r); it != plant_schedule.end()) {
      for (const auto& [fn, heavy] : it->second) {
        constexpr std::size_t kNone = std::size_t(-1);
        std::size_t victim = fn;
        if (st.fns[victim].decorated() || in_release.count(victim)) {
          // Victim is dirty or reused: substitute deterministically.
          victim = kNone;
          for (const std::size_t cand : eligible) {
            if (!st.fns[cand].decorated() && !in_release.count(cand)) {
              victim = cand;
              break;
            }
          }
          if (victim == kNone) continue;  // no clean victim left
        }
        plants.emplace_back(victim, heavy);
        in_release.insert(victim);
      }
    }
    std::vector<std::size_t> order(st.fns.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    edit_rng.shuffle(order);
    std::vector<std::size_t> benign;
    for (const std::size_t i : order) {
      if (plants.size() + benign.size() >= params.changes_per_release) break;
      if (in_release.count(i)) continue;
      benign.push_back(i);
      in_release.insert(i);
    }

    const auto emit_change = [&](std::size_t fn_id, const std::string& kind,
                                 bool planted, double factor,
                                 const std::vector<std::string>& before_lines,
                                 const std::vector<FunctionIndexEntry>& index_before) {
      FnSpec& f = st.fns[fn_id];
      ChangeRecord rec;
      rec.change_id = "c" + std::to_string(100000 + change_seq++).substr(1);
      rec.release_id = r;
      rec.release_timestamp = release.timestamp;
      rec.function_name = f.name;
      rec.file_path = st.files[f.file_id].path;
      rec.team = edit_rng.bernoulli(0.9) ? f.team
                                         : team_names()[edit_rng.below(team_names().size())];
      rec.tenure_class = planted ? 1 + int(edit_rng.below(4)) : 1 + int(edit_rng.below(7));
      rec.planted = planted;
      rec.factor = factor;
      rec.edit_kind = kind;
      rec.index_before = index_before;
      if (kind == "phantom") {
        rec.diff.file_path = rec.file_path;
        rec.index_after = index_before;
        for (auto& e : rec.index_after) e.revision = rec.change_id + "/after";
      } else {
        std::vector<FunctionIndexEntry> index_after;
        const std::vector<std::string> after_lines =
            detail::build_file_lines(st, f.file_id, &index_after, rec.change_id + "/after");
        rec.diff = detail::make_file_diff(before_lines, after_lines, rec.file_path,
                                          params.diff_context);
        if (apply_diff(before_lines, rec.diff) != after_lines)
          throw DataError("generate_corpus: emitted diff fails replay");
        rec.index_after = std::move(index_after);
      }
      release.change_ids.push_back(rec.change_id);
      corpus.changes.push_back(std::move(rec));
    };

    const auto snapshot = [&](std::size_t fn_id, std::vector<FunctionIndexEntry>* index) {
      return detail::build_file_lines(st, st.fns[fn_id].file_id, index,
                                      "c" + std::to_string(100000 + change_seq).substr(1) +
                                          "/before");
    };

    for (const auto& [fn_id, heavy] : plants) {
      FnSpec& f = st.fns[fn_id];
      std::vector<FunctionIndexEntry> index_before;
      const auto before_lines = snapshot(fn_id, &index_before);
      const double gamma = detail::solve_factor(st, f.name, delta_target);
      std::string kind;
      if (f.has_loop && edit_rng.bernoulli(0.7)) {
        kind = "plant_loop_call";
        f.heavy = heavy;
        f.heavy_guarded = false;
        f.heavy_pos = edit_rng.bernoulli(0.4) ? 0 : 1 + edit_rng.below(f.loop_body);
      } else if (f.has_guard && edit_rng.bernoulli(0.3)) {
        kind = "plant_guard_removal";
        f.guard_removed = true;
      } else {
        kind = "plant_call_swap";
        f.swap_slot = int(edit_rng.below(f.callees.size() - 1));
        f.swap_callee = heavy;
      }
      f.factor = std::max(2.5, gamma);
      release.planted_effects.push_back({f.name, f.factor});
      emit_change(fn_id, kind, true, f.factor, before_lines, index_before);
    }

    for (const std::size_t fn_id : benign) {
      FnSpec& f = st.fns[fn_id];
      if (edit_rng.bernoulli(params.phantom_fraction)) {
        std::vector<FunctionIndexEntry> index_before;
        detail::build_file_lines(st, f.file_id, &index_before,
                                 "c" + std::to_string(100000 + change_seq).substr(1) +
                                     "/before");
        emit_change(fn_id, "phantom", false, 1.0, {}, index_before);
        continue;
      }
      std::vector<FunctionIndexEntry> index_before;
      const auto before_lines = snapshot(fn_id, &index_before);
      std::string kind;
      if (f.decorated()) {
        // Fixing up earlier decoration: remove the heavy call, restore the
        // guard or the original callee.  Reverts a plant's cost factor too.
        kind = f.factor != 1.0 ? "fix_revert" : "benign_cleanup";
        f.heavy.clear();
        f.heavy_guarded = false;
        f.guard_removed = false;
        f.swap_slot = -1;
        f.swap_callee.clear();
        f.factor = 1.0;
      } else if (edit_rng.bernoulli(params.confuser_fraction)) {
        const std::string heavy =
            detail::heavy_name(era % era_words().size(), edit_rng.below(heavy_verbs().size()),
                               edit_rng.below(era_nouns()[era % era_nouns().size()].size()));
        if (f.kind == detail::FnKind::Cold) {
          kind = "confuser_cold_call";  // expensive name, never-invoked code
          f.heavy = heavy;
          f.heavy_guarded = false;
          f.heavy_pos = f.has_loop && edit_rng.bernoulli(0.5) ? edit_rng.below(f.loop_body + 1)
                                                              : 0;
        } else {
          kind = "confuser_guarded_call";  // expensive name behind a debug gate
          f.heavy = heavy;
          f.heavy_guarded = true;
          f.heavy_pos = edit_rng.below(f.loop_body + 1);
        }
      } else {
        switch (edit_rng.below(4)) {
          case 0:
            kind = "benign_rename";
            ++f.rename_salt;
            break;
          case 1:
            kind = "benign_comment";
            ++f.comment_salt;
            break;
          case 2: {
            kind = "benign_call_swap";  // committed for good, not revertable
            const std::size_t slot = 1 + edit_rng.below(f.callees.size() - 1);
            const auto& pool = cheap_callees();
            std::size_t pick = edit_rng.below(pool.size());
            while (pool[pick] == f.callees[slot]) pick = (pick + 1) % pool.size();
            f.callees[slot] = pool[pick];
            break;
          }
          default:
            if (!f.extra_calls.empty() &&
                (f.extra_calls.size() >= 3 || edit_rng.bernoulli(0.5))) {
              kind = "benign_call_remove";
              f.extra_calls.erase(f.extra_calls.begin() +
                                  std::ptrdiff_t(edit_rng.below(f.extra_calls.size())));
            } else {
              kind = "benign_call_insert";
              f.extra_calls.push_back(
                  cheap_callees()[edit_rng.below(cheap_callees().size())]);
            }
            break;
        }
      }
      emit_change(fn_id, kind, false, 1.0, before_lines, index_before);
    }

    corpus.releases.push_back(std::move(release));
    simulate_segment(r, double(r) * release_period);
  }

  corpus.series = std::move(series);
  corpus.end_time = double(params.n_releases + 1) * release_period;
  return corpus;
}

}  // namespace perfpred
