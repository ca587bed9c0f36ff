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

// Single-stage (M = 1) equilibrium. A minimum node cut between the entry set
// and the destinations gives the defender's support; a two-row matrix game
// over the cut nodes gives the adversary's mixture, and per-node indifference
// conditions give the defender's probabilities.

#ifndef DIFT_SINGLE_STAGE_HPP_
#define DIFT_SINGLE_STAGE_HPP_

#include <string>
#include <vector>

#include "dift/game.hpp"

namespace dift::single_stage {

using game::AdversaryStrategy;
using game::DefenderStrategy;
using game::GameParams;
using ifg::InformationFlowGraph;
using ifg::NodeId;

enum class ArcKind { kEntry, kSplit, kGraph, kSink };

struct FlowArc {
  int from = 0;
  int to = 0;
  double capacity = 0.0;  // +infinity except on split arcs
  ArcKind kind = ArcKind::kGraph;
  NodeId node = 0;  // the split node for kSplit arcs
};

// Vertices: s_F = 0, s_i = i, s'_i = N + i, t_F = 2N + 1.
struct FlowNetwork {
  int num_graph_nodes = 0;
  std::vector<FlowArc> arcs;

  int num_vertices() const { return 2 * num_graph_nodes + 2; }
  int source() const { return 0; }
  int sink() const { return 2 * num_graph_nodes + 1; }
  int in_vertex(NodeId i) const { return i; }
  int out_vertex(NodeId i) const { return num_graph_nodes + i; }
};

// Split arcs carry |C_D(s_i) + W_D(s_i)|. Throws NotSingleStage when M != 1.
FlowNetwork build_flow_network(const InformationFlowGraph& graph,
                               const GameParams& params);

struct MinCutResult {
  std::vector<int> cut_arcs;        // indices into FlowNetwork::arcs
  std::vector<NodeId> cut_nodes;    // sorted
  double cost = 0.0;                // sum of cut arc capacities
  double max_flow = 0.0;
  std::vector<char> source_side;    // per vertex, residual-reachable from s_F
};

// Dinic's algorithm; the cut is the set of arcs leaving the vertices that
// remain reachable from s_F in the final residual network.
MinCutResult min_cut(const FlowNetwork& network);

// Rules of entry nodes with a directed path to `node`, restricted to the
// node's relevance set.
std::vector<int> entry_relevance(const InformationFlowGraph& graph,
                                 NodeId node);

enum class Diagnostic { kInterior, kBoundary };
const char* diagnostic_name(Diagnostic d);

struct CutNodeSolution {
  NodeId node = 0;
  std::vector<int> rules;            // relevant entry rules at the node
  double cost = 0.0;                 // C_D + W_D + sum of their gammas
  double kappa = 0.0;                // beta_D - alpha_D - cost
  std::vector<double> component_costs;  // tag, trap, then `rules`
  std::vector<double> phi;           // tag, trap, then `rules`
  std::vector<double> closed_form;   // probabilities solving the phi system
  std::vector<double> played;        // probabilities in the returned profile
  double detection = 0.0;            // product of `played`
  double pi = 0.0;                   // adversary mass on paths through it
};

struct SingleStageEquilibrium {
  std::vector<CutNodeSolution> nodes;
  Diagnostic diagnostic = Diagnostic::kBoundary;
  bool adversary_drops = false;
  std::string note;
  double detection_spread = 0.0;  // max - min detection over cut nodes
  // Values of the game restricted to the cut nodes, with node costs charged
  // on the paths that use them.
  double U_D = 0.0;
  double U_A = 0.0;
  DefenderStrategy defender;
  AdversaryStrategy adversary;
  game::UtilityReport evaluated;  // full-model evaluation of the pair
};

// Throws NotSingleStage when M != 1, DegenerateEquilibrium for an empty cut,
// a nonpositive phi, or a closed-form probability outside (0, 1].
SingleStageEquilibrium solve_matrix_game(const InformationFlowGraph& graph,
                                         const GameParams& params,
                                         const MinCutResult& cut);

// Convenience: build_flow_network, min_cut, solve_matrix_game.
SingleStageEquilibrium solve(const InformationFlowGraph& graph,
                             const GameParams& params);

struct EpsilonCheck {
  double defender_gain = 0.0;   // best single-probability grid deviation
  double adversary_gain = 0.0;  // best mass shift between two cut nodes
};

// Unilateral grid deviations in the restricted game.
EpsilonCheck check_epsilon_equilibrium(const SingleStageEquilibrium& eq,
                                       const GameParams& params,
                                       double step = 1e-3);

}  // namespace dift::single_stage

#endif  // DIFT_SINGLE_STAGE_HPP_
