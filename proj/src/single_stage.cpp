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

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "dift/error.hpp"
#include "dift/respond.hpp"

namespace dift::single_stage {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kResidualEps = 1e-12;
constexpr double kKappaEps = 1e-12;

void require_single_stage(const InformationFlowGraph& graph) {
  if (graph.num_stages() != 1) {
    throw NotSingleStage("single-stage solver needs M = 1, the graph has " +
                         std::to_string(graph.num_stages()) + " stages");
  }
}

// Dinic's blocking-flow max flow over a residual graph with paired arcs.
class Dinic {
 public:
  explicit Dinic(int vertices) : adj_(vertices), level_(vertices), it_(vertices) {}

  void add(int from, int to, double capacity) {
    adj_[from].push_back(static_cast<int>(to_.size()));
    to_.push_back(to);
    residual_.push_back(capacity);
    adj_[to].push_back(static_cast<int>(to_.size()));
    to_.push_back(from);
    residual_.push_back(0.0);
  }

  double run(int s, int t) {
    double total = 0.0;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      for (double f; (f = dfs(s, t, kInf)) > kResidualEps;) total += f;
    }
    return total;
  }

  std::vector<char> reachable(int s) const {
    std::vector<char> seen(adj_.size(), 0);
    std::deque<int> queue = {s};
    seen[s] = 1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int e : adj_[u]) {
        if (residual_[e] > kResidualEps && !seen[to_[e]]) {
          seen[to_[e]] = 1;
          queue.push_back(to_[e]);
        }
      }
    }
    return seen;
  }

 private:
  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::deque<int> queue = {s};
    level_[s] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int e : adj_[u]) {
        if (residual_[e] > kResidualEps && level_[to_[e]] < 0) {
          level_[to_[e]] = level_[u] + 1;
          queue.push_back(to_[e]);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double pushed) {
    if (u == t) return pushed;
    for (int& k = it_[u]; k < static_cast<int>(adj_[u].size()); ++k) {
      const int e = adj_[u][k];
      const int v = to_[e];
      if (residual_[e] <= kResidualEps || level_[v] != level_[u] + 1) continue;
      const double got = dfs(v, t, std::min(pushed, residual_[e]));
      if (got > kResidualEps) {
        residual_[e] -= got;
        residual_[e ^ 1] += got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<int> to_;
  std::vector<double> residual_;
  std::vector<int> level_;
  std::vector<int> it_;
};

// Nodes reachable from `from` along edges of the graph.
std::vector<char> reach_from(const InformationFlowGraph& graph, NodeId from) {
  std::vector<char> seen(graph.num_nodes() + 1, 0);
  std::vector<NodeId> stack = {from};
  seen[from] = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId k : graph.successors(u)) {
      if (!seen[k]) {
        seen[k] = 1;
        stack.push_back(k);
      }
    }
  }
  return seen;
}

// Adversary strategy sending mass pi[c] through cut node c: a BFS tree from s0
// that avoids the cut reaches each cut node, and shortest continuations that
// avoid the cut lead on to a destination. Mass that cannot be routed drops.
AdversaryStrategy route_mixture(const InformationFlowGraph& graph,
                                const std::vector<NodeId>& cut,
                                const std::vector<double>& pi) {
  const int n = graph.num_nodes();
  std::vector<char> in_cut(n + 1, 0);
  for (NodeId c : cut) in_cut[c] = 1;

  std::vector<NodeId> parent(n + 1, -1);
  std::vector<char> seen(n + 1, 0);
  std::vector<NodeId> order;
  std::deque<NodeId> queue = {ifg::kSource};
  seen[ifg::kSource] = 1;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    order.push_back(u);
    if (in_cut[u]) continue;
    for (NodeId k : graph.successors(u)) {
      if (seen[k]) continue;
      seen[k] = 1;
      parent[k] = u;
      queue.push_back(k);
    }
  }

  // Distance to a destination avoiding the cut.
  std::vector<int> dist(n + 1, -1);
  queue.clear();
  for (NodeId d : graph.destinations(1)) {
    if (!in_cut[d]) {
      dist[d] = 0;
      queue.push_back(d);
    }
  }
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId p : graph.predecessors(u)) {
      if (p == ifg::kSource || in_cut[p] || dist[p] >= 0) continue;
      dist[p] = dist[u] + 1;
      queue.push_back(p);
    }
  }
  auto next_hop = [&](NodeId u) {
    NodeId best = -1;
    for (NodeId k : graph.successors(u)) {
      if (in_cut[k] || dist[k] < 0) continue;
      if (best < 0 || dist[k] < dist[best]) best = k;
    }
    return best;
  };

  std::vector<double> mass(n + 1, 0.0);
  std::vector<char> routed(n + 1, 0);
  for (std::size_t c = 0; c < cut.size(); ++c) {
    const NodeId node = cut[c];
    const bool leads_on = graph.is_destination(node, 1) || next_hop(node) >= 0;
    if (pi[c] <= 0.0 || !seen[node] || !leads_on) continue;
    routed[node] = 1;
    for (NodeId u = node; u >= 0; u = parent[u]) mass[u] += pi[c];
  }

  AdversaryStrategy out(graph);
  for (NodeId u : order) {
    if (mass[u] <= 0.0 || in_cut[u]) continue;
    const auto& moves = out.moves(u);
    std::vector<double> p(moves.size() + 1, 0.0);
    double used = 0.0;
    for (std::size_t a = 0; a < moves.size(); ++a) {
      const NodeId k = moves[a];
      if (parent[k] != u || mass[k] <= 0.0) continue;
      p[a] = mass[k] / mass[u];
      used += p[a];
    }
    p.back() = std::max(0.0, 1.0 - used);
    const double total = used + p.back();
    for (double& x : p) x /= total;
    out.set_distribution(u, 1, p);
  }
  if (mass[ifg::kSource] < 1.0) {
    // Unrouted mass drops at s0.
    const auto& moves = out.moves(ifg::kSource);
    std::vector<double> p(moves.size() + 1, 0.0);
    for (std::size_t a = 0; a < moves.size(); ++a) {
      if (parent[moves[a]] == ifg::kSource) p[a] = mass[moves[a]];
    }
    p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);
    out.set_distribution(ifg::kSource, 1, p);
  }
  for (NodeId c : cut) {
    if (!routed[c] || graph.is_destination(c, 1)) continue;
    for (NodeId u = c; !graph.is_destination(u, 1);) {
      const NodeId k = next_hop(u);
      out.set_move(u, 1, k);
      u = k;
    }
  }
  return out;
}

}  // namespace

FlowNetwork build_flow_network(const InformationFlowGraph& graph,
                               const GameParams& params) {
  require_single_stage(graph);
  params.require_shape(graph);
  FlowNetwork net;
  net.num_graph_nodes = graph.num_nodes();
  for (NodeId v : graph.entries()) {
    net.arcs.push_back(FlowArc{net.source(), net.in_vertex(v), kInf,
                               ArcKind::kEntry, v});
  }
  for (NodeId i = 1; i <= graph.num_nodes(); ++i) {
    const double capacity = std::fabs(game::tag_cost(params, graph, i) +
                                      game::trap_cost(params, graph, i));
    net.arcs.push_back(FlowArc{net.in_vertex(i), net.out_vertex(i), capacity,
                               ArcKind::kSplit, i});
  }
  for (const ifg::Edge& e : graph.data().edges) {
    net.arcs.push_back(FlowArc{net.out_vertex(e.from), net.in_vertex(e.to),
                               kInf, ArcKind::kGraph, e.from});
  }
  for (NodeId d : graph.destinations(1)) {
    net.arcs.push_back(
        FlowArc{net.out_vertex(d), net.sink(), kInf, ArcKind::kSink, d});
  }
  return net;
}

MinCutResult min_cut(const FlowNetwork& network) {
  Dinic dinic(network.num_vertices());
  for (const FlowArc& arc : network.arcs) {
    dinic.add(arc.from, arc.to, arc.capacity);
  }
  MinCutResult out;
  out.max_flow = dinic.run(network.source(), network.sink());
  out.source_side = dinic.reachable(network.source());
  for (std::size_t a = 0; a < network.arcs.size(); ++a) {
    const FlowArc& arc = network.arcs[a];
    if (out.source_side[arc.from] && !out.source_side[arc.to]) {
      out.cut_arcs.push_back(static_cast<int>(a));
      out.cost += arc.capacity;
      if (arc.kind == ArcKind::kSplit) out.cut_nodes.push_back(arc.node);
    }
  }
  std::sort(out.cut_nodes.begin(), out.cut_nodes.end());
  return out;
}

std::vector<int> entry_relevance(const InformationFlowGraph& graph,
                                 NodeId node) {
  std::vector<int> out;
  for (NodeId e : graph.entries()) {
    if (!reach_from(graph, e)[node]) continue;
    const auto& rules = graph.rules(node);
    if (std::binary_search(rules.begin(), rules.end(), e)) out.push_back(e);
  }
  return out;
}

const char* diagnostic_name(Diagnostic d) {
  return d == Diagnostic::kInterior ? "interior" : "boundary";
}

SingleStageEquilibrium solve_matrix_game(const InformationFlowGraph& graph,
                                         const GameParams& params,
                                         const MinCutResult& cut) {
  require_single_stage(graph);
  params.require_shape(graph);
  if (cut.cut_nodes.empty()) {
    throw DegenerateEquilibrium("the minimum cut is empty");
  }
  const InformationFlowGraph aug =
      graph.augmented() ? graph : ifg::augment_with_source(graph);
  const double beta_d = params.beta_D[0];
  const double alpha_d = params.alpha_D;
  const double gap = beta_d - alpha_d;

  SingleStageEquilibrium eq;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t zero = 0;
  for (NodeId i : cut.cut_nodes) {
    CutNodeSolution s;
    s.node = i;
    s.rules = entry_relevance(aug, i);
    s.component_costs = {game::tag_cost(params, aug, i),
                         game::trap_cost(params, aug, i)};
    for (int r : s.rules) s.component_costs.push_back(params.gamma[r - 1]);
    s.cost = std::accumulate(s.component_costs.begin(),
                             s.component_costs.end(), 0.0);
    s.kappa = gap - s.cost;
    const double scale = std::max({1.0, std::fabs(gap), std::fabs(s.cost)});
    if (s.kappa > kKappaEps * scale) {
      ++positive;
    } else if (s.kappa < -kKappaEps * scale) {
      ++negative;
    } else {
      s.kappa = 0.0;
      ++zero;
    }
    eq.nodes.push_back(std::move(s));
  }

  // Closed form of the indifference system: x_k = S - log(phi_k) with
  // S = sum_k log(phi_k) / (K - 1).
  bool closed_form_ok = true;
  std::string closed_form_problem;
  for (CutNodeSolution& s : eq.nodes) {
    const std::size_t k_count = s.component_costs.size();
    double sum_log = 0.0;
    for (double c : s.component_costs) {
      const double phi = gap != 0.0 ? c / gap : 0.0;
      s.phi.push_back(phi);
      if (!(phi > 0.0)) {
        closed_form_ok = false;
        closed_form_problem = "phi <= 0 at node " + std::to_string(s.node);
      }
      sum_log += std::log(phi);
    }
    if (!closed_form_ok) continue;
    const double big_s = sum_log / static_cast<double>(k_count - 1);
    for (double phi : s.phi) {
      const double p = std::exp(big_s - std::log(phi));
      if (!(p > 0.0 && p <= 1.0)) {
        closed_form_ok = false;
        closed_form_problem = "closed-form probability " + std::to_string(p) +
                              " outside (0, 1] at node " +
                              std::to_string(s.node);
      }
      s.closed_form.push_back(p);
    }
  }

  const std::size_t k = eq.nodes.size();
  std::vector<double> pi(k, 0.0);
  if (positive > 0 && negative > 0) {
    eq.diagnostic = Diagnostic::kInterior;
    double denom = 0.0;
    for (const CutNodeSolution& s : eq.nodes) {
      if (s.kappa > 0.0) denom += 1.0 / (s.kappa * positive);
      if (s.kappa < 0.0) denom += 1.0 / (-s.kappa * negative);
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double kappa = eq.nodes[c].kappa;
      if (kappa > 0.0) pi[c] = 1.0 / (kappa * positive * denom);
      if (kappa < 0.0) pi[c] = 1.0 / (-kappa * negative * denom);
    }
    eq.note = "indifference mixture over cut nodes of opposite sign";
  } else if (zero > 0) {
    eq.diagnostic = Diagnostic::kInterior;
    for (std::size_t c = 0; c < k; ++c) {
      if (eq.nodes[c].kappa == 0.0) pi[c] = 1.0 / static_cast<double>(zero);
    }
    eq.note = "mixture over cut nodes where the defender is indifferent";
  } else {
    eq.diagnostic = Diagnostic::kBoundary;
  }

  DefenderStrategy defender(aug.num_nodes());
  auto play = [&](CutNodeSolution& s, const std::vector<double>& p) {
    s.played = p;
    s.detection = 1.0;
    for (double x : p) s.detection *= x;
    defender.set(s.node, game::kTag, p[0]);
    defender.set(s.node, game::kTrap, p[1]);
    // Rules checked at the node that no entry reaches are switched on with
    // the rest so the full-model detection product equals `detection`.
    const bool idle = std::all_of(p.begin(), p.end(),
                                  [](double x) { return x == 0.0; });
    for (int r : aug.rules(s.node)) {
      defender.set(s.node, game::rule_component(r), idle ? 0.0 : 1.0);
    }
    for (std::size_t r = 0; r < s.rules.size(); ++r) {
      defender.set(s.node, game::rule_component(s.rules[r]), p[2 + r]);
    }
  };

  if (eq.diagnostic == Diagnostic::kInterior) {
    if (!closed_form_ok) throw DegenerateEquilibrium(closed_form_problem);
    for (std::size_t c = 0; c < k; ++c) {
      eq.nodes[c].pi = pi[c];
      play(eq.nodes[c], eq.nodes[c].closed_form);
    }
    eq.defender = defender;
    eq.adversary = route_mixture(aug, cut.cut_nodes, pi);
  } else if (negative > 0) {
    // Detecting beats not detecting against every column: arm the cut fully.
    // Every attack path then meets certain detection and the adversary drops.
    eq.adversary_drops = true;
    eq.note = "defender arms every cut node; adversary drops";
    for (CutNodeSolution& s : eq.nodes) {
      s.pi = 1.0 / static_cast<double>(k);
      play(s, std::vector<double>(s.component_costs.size(), 1.0));
    }
    eq.defender = defender;
    eq.adversary = AdversaryStrategy(aug);
  } else {
    // Not detecting dominates: the defender stays idle and the adversary
    // plays a best response to the idle defender.
    eq.note = "defender idle; adversary best response";
    for (CutNodeSolution& s : eq.nodes) {
      play(s, std::vector<double>(s.component_costs.size(), 0.0));
    }
    eq.defender = defender;
    const respond::AdversaryBestResponse br =
        respond::adversary_best_response(aug, params, defender);
    eq.adversary = br.strategy;
    for (NodeId u : br.walk) {
      auto it = std::find(cut.cut_nodes.begin(), cut.cut_nodes.end(), u);
      if (it != cut.cut_nodes.end()) {
        eq.nodes[it - cut.cut_nodes.begin()].pi = 1.0;
        break;
      }
    }
  }
  if (!closed_form_ok && eq.diagnostic == Diagnostic::kBoundary) {
    for (CutNodeSolution& s : eq.nodes) s.closed_form.clear();
  }

  double lo = eq.nodes.front().detection;
  double hi = lo;
  for (const CutNodeSolution& s : eq.nodes) {
    lo = std::min(lo, s.detection);
    hi = std::max(hi, s.detection);
  }
  eq.detection_spread = hi - lo;

  for (const CutNodeSolution& s : eq.nodes) {
    double spend = 0.0;
    for (std::size_t c = 0; c < s.played.size(); ++c) {
      spend += s.played[c] * s.component_costs[c];
    }
    if (eq.adversary_drops) {
      eq.U_D += spend;
      continue;
    }
    eq.U_D += s.pi * (beta_d + s.detection * (alpha_d - beta_d) + spend);
    eq.U_A += s.pi * (params.beta_A[0] +
                      s.detection * (params.alpha_A - params.beta_A[0]));
  }
  eq.evaluated = game::evaluate_exact(aug, params, eq.defender, eq.adversary);
  return eq;
}

SingleStageEquilibrium solve(const InformationFlowGraph& graph,
                             const GameParams& params) {
  return solve_matrix_game(graph, params,
                           min_cut(build_flow_network(graph, params)));
}

EpsilonCheck check_epsilon_equilibrium(const SingleStageEquilibrium& eq,
                                       const GameParams& params,
                                       double step) {
  EpsilonCheck out;
  const double alpha_d = params.alpha_D;
  const double beta_d = params.beta_D[0];
  const int grid = static_cast<int>(std::lround(1.0 / step));

  // Defender: move one probability of one cut node to any grid value. Only
  // that node's term of the restricted payoff changes.
  for (const CutNodeSolution& s : eq.nodes) {
    const double weight = eq.adversary_drops ? 0.0 : s.pi;
    for (std::size_t c = 0; c < s.played.size(); ++c) {
      double others = 1.0;
      for (std::size_t l = 0; l < s.played.size(); ++l) {
        if (l != c) others *= s.played[l];
      }
      for (int g = 0; g <= grid; ++g) {
        const double v = std::min(1.0, g * step);
        const double delta = v - s.played[c];
        const double gain =
            weight * delta * others * (alpha_d - beta_d) +
            (eq.adversary_drops ? 1.0 : weight) * delta * s.component_costs[c];
        out.defender_gain = std::max(out.defender_gain, gain);
      }
    }
  }

  // Adversary: shift path mass between two cut nodes.
  if (!eq.adversary_drops) {
    for (const CutNodeSolution& a : eq.nodes) {
      const double ua = params.beta_A[0] +
                        a.detection * (params.alpha_A - params.beta_A[0]);
      for (const CutNodeSolution& b : eq.nodes) {
        if (a.node == b.node) continue;
        const double ub = params.beta_A[0] +
                          b.detection * (params.alpha_A - params.beta_A[0]);
        for (int g = 1; g <= grid; ++g) {
          const double delta = std::min(a.pi, g * step);
          out.adversary_gain = std::max(out.adversary_gain, delta * (ub - ua));
          if (delta >= a.pi) break;
        }
      }
    }
  }
  return out;
}

}  // namespace dift::single_stage
