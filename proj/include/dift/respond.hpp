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

// Best-response oracles. The adversary's is a shortest path over the layered
// (node, stage) graph; the defender's is double greedy over a discretized
// strategy space.

#ifndef DIFT_RESPOND_HPP_
#define DIFT_RESPOND_HPP_

#include <cstdint>
#include <vector>

#include "dift/game.hpp"

namespace dift::respond {

using game::AdversaryStrategy;
using game::DefenderStrategy;
using game::GameParams;
using ifg::InformationFlowGraph;
using ifg::NodeId;

// Edge weight on entering node k. kLogSurvival uses -log(1 - w(k)) so that
// shortest paths maximize the survival product; kAdditive uses w(k) itself,
// which is only a first-order approximation of it.
enum class WeightMode { kLogSurvival, kAdditive };

// kTerminalStage scores a path ending at a stage-j destination by
// p (beta_A_j - alpha_A) + alpha_A. kCumulative scores it by its exact
// adversary utility, which also credits the rewards of the stages completed
// on the way.
enum class PathObjective { kTerminalStage, kCumulative };

struct BestResponseOptions {
  PathObjective objective = PathObjective::kTerminalStage;
  WeightMode weights = WeightMode::kLogSurvival;
};

struct AdversaryBestResponse {
  bool drop = false;
  std::vector<game::PathStep> path;  // from (s0, 1); stage on arrival
  std::vector<NodeId> walk;          // node sequence from s0
  int target_stage = 0;              // last stage completed; 0 when dropping
  double survival = 1.0;             // product of (1 - w) along the walk
  double value = 0.0;                // objective value, 0 when dropping
  // Best path value under the terminal-stage objective even when dropping
  // is better; equal to `value` under the cumulative objective.
  double path_value = 0.0;
  double evaluated_U_A = 0.0;        // U_A of `strategy` by exact evaluation
  AdversaryStrategy strategy;        // pure strategy following `walk`
};

// Throws Unreachable when no destination of any stage can be reached from s0.
AdversaryBestResponse adversary_best_response(
    const InformationFlowGraph& graph, const GameParams& params,
    const DefenderStrategy& defender, const BestResponseOptions& options = {});

// Pure strategy that follows `walk` (starting at s0) and then drops. Throws
// InvalidPath if a step is not an edge or a decision state would need two
// different moves.
AdversaryStrategy strategy_from_walk(const InformationFlowGraph& graph,
                                     const std::vector<NodeId>& walk);

// The arrival stages along `walk`, starting with (s0, 1).
std::vector<game::PathStep> stage_path(const InformationFlowGraph& graph,
                                       const std::vector<NodeId>& walk);

// One discretization level of one strategy component at one node.
struct GroundElement {
  NodeId node = 0;
  int component = 0;
  int level = 1;  // 1..Z[component]

  friend bool operator==(const GroundElement&, const GroundElement&) = default;
};

// Elements ordered by node, component, level. Only components that enter the
// detection product at a node (tag, trap, relevant rules) are included; the
// others only add cost. `levels` has one entry per component (2 + N).
std::vector<GroundElement> ground_set(const InformationFlowGraph& graph,
                                      const std::vector<int>& levels);

// p(i, c) = |selected levels of (i, c)| / levels[c].
DefenderStrategy induced_strategy(const InformationFlowGraph& graph,
                                  const std::vector<int>& levels,
                                  const std::vector<GroundElement>& ground,
                                  const std::vector<char>& selected);

enum class EvaluatorChoice { kAuto, kExact, kMarkov };

struct ObjectiveOptions {
  // kAuto enumerates paths exactly when the adversary has at most
  // exact_path_limit of them and propagates mass otherwise.
  EvaluatorChoice evaluator = EvaluatorChoice::kAuto;
  std::int64_t exact_path_limit = 10000;
  game::ExactOptions exact;
};

// f(V') = U_D(p_D(V'), adversary) over subsets of the ground set.
class DefenderObjective {
 public:
  DefenderObjective(const InformationFlowGraph& graph, const GameParams& params,
                    const AdversaryStrategy& adversary, std::vector<int> levels,
                    const ObjectiveOptions& options = {});

  const std::vector<GroundElement>& ground() const { return ground_; }
  const std::vector<int>& levels() const { return levels_; }
  std::size_t size() const { return ground_.size(); }
  game::Estimator estimator() const { return estimator_; }

  double operator()(const std::vector<char>& selected);
  DefenderStrategy strategy(const std::vector<char>& selected) const;
  std::int64_t evaluations() const { return evaluations_; }

 private:
  const InformationFlowGraph& graph_;
  const GameParams& params_;
  const AdversaryStrategy& adversary_;
  std::vector<int> levels_;
  std::vector<GroundElement> ground_;
  ObjectiveOptions options_;
  game::Estimator estimator_;
  std::int64_t evaluations_ = 0;
};

// f(V' + element) - f(V'). Throws ValidationError if the element is already
// selected.
double marginal_gain(DefenderObjective& f, const std::vector<char>& selected,
                     std::size_t element);

enum class GreedyVariant { kRandomized, kDeterministic };

struct GreedyOptions {
  GreedyVariant variant = GreedyVariant::kRandomized;
  std::uint64_t seed = 1;
  ObjectiveOptions objective;
};

struct DiscretizedDefenderSet {
  std::vector<int> levels;
  std::vector<GroundElement> ground;
  std::vector<char> selected;
  DefenderStrategy strategy;
  double value = 0.0;
  std::int64_t evaluations = 0;
};

// Double greedy over the ground set in index order, using exactly
// 2 |ground set| objective evaluations.
DiscretizedDefenderSet defender_best_response_greedy(
    const InformationFlowGraph& graph, const GameParams& params,
    const AdversaryStrategy& adversary, const std::vector<int>& levels,
    const GreedyOptions& options = {});

}  // namespace dift::respond

#endif  // DIFT_RESPOND_HPP_
