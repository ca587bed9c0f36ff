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

#include "dift/single_stage.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "dift/error.hpp"
#include "oracles.hpp"

namespace dift::single_stage {
namespace {

using game::default_params;
using ifg::make_data;

InformationFlowGraph plain(ifg::GraphData data) {
  return InformationFlowGraph(std::move(data));
}

// Split capacities |c1 + c2| B = 100 B under the default costs.
ifg::GraphData with_capacities(ifg::GraphData data,
                               const std::vector<double>& caps) {
  data.normalized = false;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    data.nodes[i].traffic_weight = caps[i] / 100.0;
  }
  return data;
}

TEST(FlowNetwork, ChainConstruction) {
  const auto g = plain(make_data(3, {{1, 2}, {2, 3}}, {{3}}, {1}));
  const FlowNetwork net = build_flow_network(g, default_params(3, 1));
  EXPECT_EQ(net.num_vertices(), 8);
  std::set<std::pair<int, int>> arcs;
  for (const FlowArc& a : net.arcs) arcs.insert({a.from, a.to});
  const int sf = net.source(), tf = net.sink();
  auto in = [&](NodeId i) { return net.in_vertex(i); };
  auto out = [&](NodeId i) { return net.out_vertex(i); };
  const std::set<std::pair<int, int>> expected = {
      {sf, in(1)},     {in(1), out(1)}, {out(1), in(2)}, {in(2), out(2)},
      {out(2), in(3)}, {in(3), out(3)}, {out(3), tf}};
  EXPECT_EQ(arcs, expected);
  for (const FlowArc& a : net.arcs) {
    if (a.kind == ArcKind::kSplit) {
      EXPECT_NEAR(a.capacity, 100.0 / 3.0, 1e-12);
    } else {
      EXPECT_TRUE(std::isinf(a.capacity));
    }
  }
}

TEST(FlowNetwork, RejectsMultiStage) {
  const auto g = plain(make_data(2, {{1, 2}}, {{1}, {2}}, {1}));
  EXPECT_THROW(build_flow_network(g, default_params(2, 2)), NotSingleStage);
  EXPECT_THROW(solve(g, default_params(2, 2)), NotSingleStage);
}

TEST(FlowNetwork, ParallelPathsAreVertexDisjoint) {
  // 1 -> 2 and 3 -> 4 with unit split capacities: a max flow of 2 needs two
  // vertex-disjoint source-sink paths.
  const auto g = plain(with_capacities(
      make_data(4, {{1, 2}, {3, 4}}, {{2, 4}}, {1, 3}), {1, 1, 1, 1}));
  const auto cut = min_cut(build_flow_network(g, default_params(4, 1)));
  EXPECT_NEAR(cut.max_flow, 2.0, 1e-12);
  EXPECT_EQ(cut.cut_nodes.size(), 2u);
}

TEST(MinCut, Chain) {
  const auto g = plain(with_capacities(
      make_data(3, {{1, 2}, {2, 3}}, {{3}}, {1}), {5, 3, 7}));
  const auto cut = min_cut(build_flow_network(g, default_params(3, 1)));
  EXPECT_EQ(cut.cut_nodes, std::vector<NodeId>{2});
  EXPECT_NEAR(cut.cost, 3.0, 1e-12);
}

TEST(MinCut, TwoDisjointPaths) {
  // Path a1 -> b1 costs {4, 6}; path a2 -> b2 costs {5, 9}.
  const auto g = plain(with_capacities(
      make_data(4, {{1, 2}, {3, 4}}, {{2, 4}}, {1, 3}), {4, 6, 5, 9}));
  const auto cut = min_cut(build_flow_network(g, default_params(4, 1)));
  EXPECT_EQ(cut.cut_nodes, (std::vector<NodeId>{1, 3}));
  EXPECT_NEAR(cut.cost, 9.0, 1e-12);
}

bool disconnects(const InformationFlowGraph& g,
                 const std::vector<NodeId>& removed) {
  std::vector<char> seen(g.num_nodes() + 1, 0);
  std::vector<NodeId> stack;
  auto gone = [&](NodeId v) {
    return std::find(removed.begin(), removed.end(), v) != removed.end();
  };
  for (NodeId e : g.entries()) {
    if (!gone(e)) {
      seen[e] = 1;
      stack.push_back(e);
    }
  }
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.successors(u)) {
      if (!seen[v] && !gone(v)) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  for (NodeId d : g.destinations(1)) {
    if (seen[d]) return false;
  }
  return true;
}

TEST(MinCut, MatchesSubsetEnumeration) {
  std::mt19937_64 rng(41);
  testing::RandomGraphOptions o;
  o.min_nodes = 4;
  o.max_nodes = 9;
  o.min_stages = o.max_stages = 1;
  o.acyclic = false;
  for (int t = 0; t < 60; ++t) {
    const auto g = testing::random_graph(rng, o);
    const auto params = testing::random_params(rng, g.num_nodes(), 1);
    const FlowNetwork net = build_flow_network(g, params);
    const auto cut = min_cut(net);
    const double oracle = testing::brute_force_min_separator(g, params);
    EXPECT_NEAR(cut.cost, oracle, 1e-9 * std::max(1.0, oracle)) << t;
    EXPECT_NEAR(cut.max_flow, cut.cost, 1e-9 * std::max(1.0, oracle));
    EXPECT_TRUE(disconnects(g, cut.cut_nodes));
    for (int a : cut.cut_arcs) EXPECT_EQ(net.arcs[a].kind, ArcKind::kSplit);
    EXPECT_TRUE(std::is_sorted(cut.cut_nodes.begin(), cut.cut_nodes.end()));
  }
}

TEST(EntryRelevance, ReachingEntriesOnly) {
  auto data = make_data(4, {{1, 3}, {2, 3}, {3, 4}}, {{4}}, {1, 2});
  data.nodes[2].rules = {1, 3};
  const auto g = ifg::augment_with_source(plain(data));
  EXPECT_EQ(entry_relevance(g, 3), std::vector<int>{1});
  EXPECT_EQ(entry_relevance(g, 4), (std::vector<int>{1, 2}));
  EXPECT_EQ(entry_relevance(g, 1), std::vector<int>{1});
}

void expect_closed_form_system(const CutNodeSolution& s) {
  // sum_{l != k} log p_l = log phi_k.
  ASSERT_EQ(s.closed_form.size(), s.phi.size());
  for (std::size_t k = 0; k < s.phi.size(); ++k) {
    double sum = 0.0;
    for (std::size_t l = 0; l < s.phi.size(); ++l) {
      if (l != k) sum += std::log(s.closed_form[l]);
    }
    EXPECT_NEAR(sum, std::log(s.phi[k]), 1e-9);
  }
}

TEST(Solve, SingleCutNode) {
  const auto g = plain(make_data(3, {{1, 2}, {2, 3}}, {{3}}, {1}));
  const auto eq = solve(g, default_params(3, 1));
  ASSERT_EQ(eq.nodes.size(), 1u);
  EXPECT_EQ(eq.nodes[0].pi, 1.0);
  expect_closed_form_system(eq.nodes[0]);
  // The detection gap dwarfs the costs, so arming everything wins.
  EXPECT_EQ(eq.diagnostic, Diagnostic::kBoundary);
  EXPECT_TRUE(eq.adversary_drops);
  EXPECT_EQ(eq.evaluated.U_A, 0.0);
}

TEST(Solve, EqualCostsGiveBoundaryUnlessIndifferent) {
  const auto g = plain(with_capacities(
      make_data(4, {{1, 2}, {3, 4}}, {{2, 4}}, {1, 3}), {1, 9, 1, 9}));
  const auto params = default_params(4, 1);
  const auto eq = solve(g, params);
  ASSERT_EQ(eq.nodes.size(), 2u);
  EXPECT_EQ(eq.nodes[0].kappa, eq.nodes[1].kappa);
  EXPECT_EQ(eq.diagnostic, Diagnostic::kBoundary);
  EXPECT_STREQ(diagnostic_name(eq.diagnostic), "boundary");
}

TEST(Solve, IdleDefenderWhenCostsDominate) {
  const auto g = plain(make_data(2, {{1, 2}}, {{2}}, {1}));
  auto params = default_params(2, 1);
  params.c1 = params.c2 = -1e5;
  const auto eq = solve(g, params);
  EXPECT_EQ(eq.diagnostic, Diagnostic::kBoundary);
  EXPECT_FALSE(eq.adversary_drops);
  for (double p : eq.nodes[0].played) EXPECT_EQ(p, 0.0);
  EXPECT_EQ(eq.evaluated.U_A, params.beta_A[0]);
}

// Two entries each feeding one destination, with random costs large enough
// that the cut nodes can fall on both sides of the indifference line.
bool interior_instance(std::mt19937_64& rng, InformationFlowGraph* graph,
                       GameParams* params, SingleStageEquilibrium* eq) {
  *graph = plain(make_data(4, {{1, 3}, {2, 4}}, {{3, 4}}, {1, 2}));
  *params = testing::random_params(rng, 4, 1, 1.0, 1500.0);
  std::uniform_real_distribution<double> c(-5000.0, -1.0);
  params->c1 = c(rng);
  params->c2 = c(rng);
  try {
    *eq = solve(*graph, *params);
  } catch (const DegenerateEquilibrium&) {
    return false;
  }
  return eq->diagnostic == Diagnostic::kInterior;
}

TEST(Solve, InteriorMixture) {
  std::mt19937_64 rng(42);
  int found = 0;
  for (int attempt = 0; attempt < 5000 && found < 10; ++attempt) {
    InformationFlowGraph g(make_data(1, {}, {{1}}, {1}));
    GameParams params;
    SingleStageEquilibrium eq;
    if (!interior_instance(rng, &g, &params, &eq)) continue;
    ++found;
    double mass = 0.0, kappa_sum = 0.0;
    for (const auto& s : eq.nodes) {
      EXPECT_GE(s.pi, 0.0);
      mass += s.pi;
      kappa_sum += s.pi * s.kappa;
      expect_closed_form_system(s);
      for (double p : s.played) {
        EXPECT_GT(p, 0.0);
        EXPECT_LE(p, 1.0);
      }
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_NEAR(kappa_sum, 0.0, 1e-9 * std::fabs(params.alpha_D));

    // The defender cannot gain from any single grid deviation.
    const EpsilonCheck check = check_epsilon_equilibrium(eq, params);
    EXPECT_LE(check.defender_gain, 1e-6);

    // Supported attack paths cross exactly one cut node.
    std::vector<NodeId> cut;
    for (const auto& s : eq.nodes) cut.push_back(s.node);
    const auto aug = ifg::augment_with_source(g);
    game::for_each_path(
        aug, eq.defender, eq.adversary, game::default_max_len(aug), 1000,
        [&](const game::PathOutcome& path) {
          if (path.stage_hits.empty()) return;
          int hits = 0;
          for (const auto& step : path.path) {
            hits += std::count(cut.begin(), cut.end(), step.node);
          }
          EXPECT_EQ(hits, 1);
        });
  }
  EXPECT_EQ(found, 10);
}

TEST(EpsilonCheck, DetectsNonEquilibrium) {
  const auto g = plain(make_data(3, {{1, 2}, {2, 3}}, {{3}}, {1}));
  const auto params = default_params(3, 1);
  auto eq = solve(g, params);
  // Pretend the defender left the tag off against a committed adversary.
  eq.adversary_drops = false;
  eq.nodes[0].played[0] = 0.0;
  eq.nodes[0].detection = 0.0;
  EXPECT_GT(check_epsilon_equilibrium(eq, params).defender_gain, 1.0);
}

}  // namespace
}  // namespace dift::single_stage
