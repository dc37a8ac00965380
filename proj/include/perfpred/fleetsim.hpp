// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fleet CPU sampling simulator.  A cost model (acyclic call graph with
// per-invocation self costs and external invocation rates) drives a
// freeze-frame sampler: at every interval a batch of stack snapshots is
// drawn with probability proportional to true CPU share, and each snapshot
// credits the sampled function plus all of its callers.  The per-function
// fraction of credited snapshots is its GCPU series.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "perfpred/errors.hpp"
#include "perfpred/rng.hpp"

namespace perfpred {

struct CallEdge {
  std::string callee;
  double calls_per_invocation = 1.0;

  bool operator==(const CallEdge&) const = default;
};

struct CostModel {
  std::map<std::string, double> self_cost;  // CPU units per invocation
  std::map<std::string, std::vector<CallEdge>> calls;
  std::map<std::string, double> invocation_rate;  // external invocations per time unit

  bool operator==(const CostModel&) const = default;
};

struct GcpuSeries {
  std::string function_name;
  std::vector<std::pair<double, double>> samples;  // (timestamp, gcpu fraction)

  bool operator==(const GcpuSeries&) const = default;
};

/// Per-interval multiplicative log-normal noise on invocation rates.
struct SamplingNoise {
  double rate_sigma = 0.0;                       // applied to every external rate
  std::map<std::string, double> per_function;    // overrides for specific functions

  double sigma_for(const std::string& name) const {
    const auto it = per_function.find(name);
    return it == per_function.end() ? rate_sigma : it->second;
  }
};

namespace detail {

struct FlowGraph {
  std::vector<std::string> names;                    // topological order, roots first
  std::map<std::string, std::size_t> id;
  std::vector<double> self_cost;
  std::vector<double> base_rate;
  std::vector<std::vector<std::pair<std::size_t, double>>> out_edges;  // (callee, cpi)
  std::vector<std::vector<std::pair<std::size_t, double>>> in_edges;   // (caller, cpi)
};

/// Validates the model and produces a topological ordering; throws on cycles.
inline FlowGraph build_flow_graph(const CostModel& model) {
  FlowGraph g;
  for (const auto& [name, cost] : model.self_cost) {
    if (cost < 0.0) throw DataError("CostModel: negative self cost for " + name);
    g.id.emplace(name, g.id.size());
    g.names.push_back(name);
  }
  const auto require_known = [&](const std::string& name) {
    const auto it = g.id.find(name);
    if (it == g.id.end()) throw DataError("CostModel: unknown function " + name);
    return it->second;
  };
  g.self_cost.resize(g.names.size());
  g.base_rate.assign(g.names.size(), 0.0);
  g.out_edges.assign(g.names.size(), {});
  g.in_edges.assign(g.names.size(), {});
  for (const auto& [name, cost] : model.self_cost) g.self_cost[g.id[name]] = cost;
  for (const auto& [name, rate] : model.invocation_rate) {
    if (rate < 0.0) throw DataError("CostModel: negative invocation rate for " + name);
    g.base_rate[require_known(name)] = rate;
  }
  for (const auto& [name, edges] : model.calls) {
    const std::size_t from = require_known(name);
    for (const CallEdge& e : edges) {
      if (e.calls_per_invocation < 0.0)
        throw DataError("CostModel: negative calls-per-invocation on edge " + name + " -> " +
                        e.callee);
      const std::size_t to = require_known(e.callee);
      g.out_edges[from].emplace_back(to, e.calls_per_invocation);
      g.in_edges[to].emplace_back(from, e.calls_per_invocation);
    }
  }

  // Kahn's algorithm over the id order keeps the ordering deterministic.
  std::vector<std::size_t> in_degree(g.names.size(), 0);
  for (const auto& edges : g.out_edges)
    for (const auto& [to, cpi] : edges) ++in_degree[to];
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < g.names.size(); ++v)
    if (in_degree[v] == 0) ready.push_back(v);
  std::vector<std::size_t> order;
  order.reserve(g.names.size());
  for (std::size_t at = 0; at < ready.size(); ++at) {
    const std::size_t v = ready[at];
    order.push_back(v);
    for (const auto& [to, cpi] : g.out_edges[v])
      if (--in_degree[to] == 0) ready.push_back(to);
  }
  if (order.size() != g.names.size())
    throw DataError("CostModel: call graph contains a cycle");

  // Re-index so that position == topological rank.
  FlowGraph sorted;
  sorted.names.reserve(g.names.size());
  std::vector<std::size_t> rank(g.names.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  for (const std::size_t v : order) sorted.names.push_back(g.names[v]);
  for (std::size_t r = 0; r < sorted.names.size(); ++r) sorted.id[sorted.names[r]] = r;
  sorted.self_cost.resize(order.size());
  sorted.base_rate.resize(order.size());
  sorted.out_edges.assign(order.size(), {});
  sorted.in_edges.assign(order.size(), {});
  for (std::size_t v = 0; v < order.size(); ++v) {
    sorted.self_cost[rank[v]] = g.self_cost[v];
    sorted.base_rate[rank[v]] = g.base_rate[v];
    for (const auto& [to, cpi] : g.out_edges[v])
      sorted.out_edges[rank[v]].emplace_back(rank[to], cpi);
    for (const auto& [from, cpi] : g.in_edges[v])
      sorted.in_edges[rank[v]].emplace_back(rank[from], cpi);
  }
  return sorted;
}

/// Invocation flow per function given external rates (topological order).
inline std::vector<double> invocation_flow(const FlowGraph& g, const std::vector<double>& rate) {
  std::vector<double> inv = rate;
  for (std::size_t v = 0; v < g.names.size(); ++v)
    for (const auto& [to, cpi] : g.out_edges[v]) inv[to] += inv[v] * cpi;
  return inv;
}

}  // namespace detail

/// True inclusive CPU share per function: the probability that a uniformly
/// random unit of busy CPU lies in a call path containing the function.
inline std::map<std::string, double> inclusive_shares(const CostModel& model) {
  const detail::FlowGraph g = detail::build_flow_graph(model);
  const std::vector<double> inv = detail::invocation_flow(g, g.base_rate);
  std::vector<double> incl(g.names.size(), 0.0);  // inclusive cost per invocation
  for (std::size_t v = g.names.size(); v-- > 0;) {
    incl[v] = g.self_cost[v];
    for (const auto& [to, cpi] : g.out_edges[v]) incl[v] += cpi * incl[to];
  }
  double total = 0.0;
  for (std::size_t v = 0; v < g.names.size(); ++v) total += inv[v] * g.self_cost[v];
  std::map<std::string, double> shares;
  for (std::size_t v = 0; v < g.names.size(); ++v)
    shares[g.names[v]] = total > 0.0 ? inv[v] * incl[v] / total : 0.0;
  return shares;
}

/// Draws batch_size stack snapshots at every interval over [interval,
/// duration] and returns each function's credited-sample fraction series.
inline std::map<std::string, GcpuSeries> simulate_sampling(const CostModel& model,
                                                           double duration, double interval,
                                                           std::size_t batch_size,
                                                           std::uint64_t seed,
                                                           const SamplingNoise& noise = {}) {
  if (interval <= 0.0) throw ConfigError("simulate_sampling: interval must be > 0");
  if (batch_size < 1) throw ConfigError("simulate_sampling: batch_size must be >= 1");
  const detail::FlowGraph g = detail::build_flow_graph(model);
  const std::size_t n = g.names.size();
  std::vector<double> sigma(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) sigma[v] = noise.sigma_for(g.names[v]);

  Rng rng(seed);
  std::map<std::string, GcpuSeries> out;
  for (const auto& name : g.names) out[name].function_name = name;

  const std::size_t n_ticks = static_cast<std::size_t>(duration / interval);
  std::vector<double> rate(n), self_time(n), cum(n), credited(n);
  std::vector<std::size_t> path;
  for (std::size_t tick = 1; tick <= n_ticks; ++tick) {
    const double now = static_cast<double>(tick) * interval;
    for (std::size_t v = 0; v < n; ++v) {
      rate[v] = g.base_rate[v];
      if (sigma[v] > 0.0 && rate[v] > 0.0) rate[v] *= std::exp(sigma[v] * rng.normal());
    }
    const std::vector<double> inv = detail::invocation_flow(g, rate);
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      self_time[v] = inv[v] * g.self_cost[v];
      total += self_time[v];
      cum[v] = total;
    }
    if (total <= 0.0) throw DataError("simulate_sampling: model consumes no CPU");

    std::fill(credited.begin(), credited.end(), 0.0);
    for (std::size_t s = 0; s < batch_size; ++s) {
      // Sample the function owning the busy CPU unit...
      const double u = rng.uniform() * total;
      std::size_t v = static_cast<std::size_t>(
          std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      if (v >= n) v = n - 1;
      // ...then walk a caller chain backwards, crediting the whole stack.
      path.clear();
      path.push_back(v);
      std::size_t at = v;
      while (true) {
        double upstream = 0.0;
        for (const auto& [from, cpi] : g.in_edges[at]) upstream += inv[from] * cpi;
        const double total_in = upstream + rate[at];
        if (total_in <= 0.0 || upstream <= 0.0) break;
        double pick = rng.uniform() * total_in;
        if (pick >= upstream) break;  // externally invoked here
        std::size_t chosen = g.in_edges[at].back().first;
        for (const auto& [from, cpi] : g.in_edges[at]) {
          const double w = inv[from] * cpi;
          if (pick < w) {
            chosen = from;
            break;
          }
          pick -= w;
        }
        at = chosen;
        path.push_back(at);
      }
      for (const std::size_t f : path) credited[f] += 1.0;
    }
    for (std::size_t v = 0; v < n; ++v)
      out[g.names[v]].samples.emplace_back(now,
                                           credited[v] / static_cast<double>(batch_size));
  }
  return out;
}

}  // namespace perfpred
