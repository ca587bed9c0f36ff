// Copyright 2026 The DIFT Game Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>

#include "dift/cli.hpp"
#include "dift/error.hpp"
#include "random_internal.hpp"

namespace dift::cli {
namespace {

using ifg::Edge;
using ifg::InformationFlowGraph;
using ifg::NodeId;

// (node, stage) states reachable from `entry`, following arrival semantics.
std::vector<char> reachable_states(const InformationFlowGraph& graph,
                                   NodeId entry) {
  const int m = graph.num_stages();
  std::vector<char> seen(static_cast<std::size_t>(graph.num_nodes() + 1) * m,
                         0);
  auto state = [m](NodeId i, int j) {
    return static_cast<std::size_t>(i) * m + (j - 1);
  };
  std::deque<std::pair<NodeId, int>> queue;
  auto visit = [&](NodeId k, int stage) {
    // Record the arrival stage itself and every stage crossed on arrival.
    const game::Arrival a = game::arrive(graph, k, stage);
    for (int j = stage; j <= (a.complete ? m : a.stage); ++j) {
      if (seen[state(k, j)]) continue;
      seen[state(k, j)] = 1;
      if (j == a.stage && !a.complete) queue.emplace_back(k, j);
    }
  };
  visit(entry, 1);
  while (!queue.empty()) {
    const auto [u, stage] = queue.front();
    queue.pop_front();
    for (NodeId k : graph.successors(u)) visit(k, stage);
  }
  return seen;
}

}  // namespace

bool stage_reachable(const InformationFlowGraph& graph) {
  const int m = graph.num_stages();
  for (NodeId e : graph.entries()) {
    const std::vector<char> seen = reachable_states(graph, e);
    for (int j = 1; j <= m; ++j) {
      for (NodeId d : graph.destinations(j)) {
        if (!seen[static_cast<std::size_t>(d) * m + (j - 1)]) return false;
      }
    }
  }
  return true;
}

InformationFlowGraph gen_graph(const GenGraphOptions& o) {
  const int dests = std::accumulate(o.dest_per_stage.begin(),
                                    o.dest_per_stage.end(), 0);
  if (o.nodes < 1 || o.stages < 1 || o.entries < 1 || o.max_attempts < 1 ||
      static_cast<int>(o.dest_per_stage.size()) != o.stages ||
      std::any_of(o.dest_per_stage.begin(), o.dest_per_stage.end(),
                  [](int d) { return d < 1; })) {
    throw ParamError(
        "gen_graph needs positive sizes and one destination count per stage");
  }
  if (!(o.density >= 0.0 && o.density <= 1.0)) {
    throw ParamError("edge density must lie in [0, 1]");
  }
  if (dests > o.nodes || o.entries > o.nodes) {
    throw ParamError("more destinations or entries than nodes");
  }

  const int n = o.nodes;
  for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
    std::mt19937_64 rng = internal::stream(o.seed, attempt);
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 1);
    std::shuffle(order.begin(), order.end(), rng);

    // Entries come first in the shuffled order; destinations are drawn from
    // the non-entry nodes when there are enough of them.
    std::vector<NodeId> entries(order.begin(), order.begin() + o.entries);
    std::vector<NodeId> pool(order.begin() + (dests + o.entries <= n ? o.entries : 0),
                             order.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::vector<NodeId>> stages(o.stages);
    std::size_t next = 0;
    for (int j = 0; j < o.stages; ++j) {
      for (int d = 0; d < o.dest_per_stage[j]; ++d) {
        stages[j].push_back(pool[next++]);
      }
    }

    std::vector<Edge> edges;
    std::vector<char> has(static_cast<std::size_t>(n + 1) * (n + 1), 0);
    auto add = [&](NodeId u, NodeId v) {
      if (u == v || has[static_cast<std::size_t>(u) * (n + 1) + v]) return;
      has[static_cast<std::size_t>(u) * (n + 1) + v] = 1;
      edges.push_back(Edge{u, v});
    };
    for (int t = o.entries; t < n; ++t) {
      std::uniform_int_distribution<int> parent(0, t - 1);
      add(order[parent(rng)], order[t]);
    }
    for (NodeId u = 1; u <= n; ++u) {
      for (NodeId v = 1; v <= n; ++v) {
        if (u != v && internal::uniform01(rng) < o.density) add(u, v);
      }
    }

    ifg::GraphData data = ifg::make_data(n, edges, stages, entries);
    double total = 0.0;
    for (ifg::Node& node : data.nodes) {
      node.traffic_weight = 0.5 + internal::uniform01(rng);
      node.label = "n" + std::to_string(node.id);
      total += node.traffic_weight;
    }
    for (ifg::Node& node : data.nodes) node.traffic_weight /= total;

    InformationFlowGraph plain(data);
    // Rule r belongs to entry r and is checked wherever entry r reaches.
    for (ifg::Node& node : data.nodes) node.rules.clear();
    for (NodeId e : plain.data().vulnerable) {
      std::vector<char> seen(n + 1, 0);
      std::vector<NodeId> stack = {e};
      seen[e] = 1;
      while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        data.nodes[u - 1].rules.push_back(e);
        for (NodeId k : plain.successors(u)) {
          if (!seen[k]) {
            seen[k] = 1;
            stack.push_back(k);
          }
        }
      }
    }
    for (ifg::Node& node : data.nodes) {
      std::sort(node.rules.begin(), node.rules.end());
    }
    InformationFlowGraph graph(std::move(data));
    if (stage_reachable(graph)) return graph;
  }
  throw GenerationFailed("no graph met the reachability requirement after " +
                         std::to_string(o.max_attempts) + " attempts");
}

}  // namespace dift::cli
