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

// Strategies, payoff parameters and utility evaluation for the multi-stage
// game between a DIFT defender and an APT adversary.
//
// The adversary walks the augmented graph from s0 in stage 1. Entering node i
// triggers detection with probability detection_prob(i). Arriving undetected
// at a destination of the current stage j completes stage j: if j < M the
// walk continues in stage j+1 from the same node (and completes j+1 at once
// when the node is also in D_{j+1}); if j = M the attack is complete. At any
// other state the adversary moves to a successor or drops.

#ifndef DIFT_GAME_HPP_
#define DIFT_GAME_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dift/ifg.hpp"

namespace dift::game {

using ifg::InformationFlowGraph;
using ifg::NodeId;

// Strategy components at a node: tag, trap, then one per security rule.
inline constexpr int kTag = 0;
inline constexpr int kTrap = 1;
constexpr int rule_component(int rule) { return 1 + rule; }

struct GameParams {
  double alpha_A = 0.0;         // adversary penalty on detection, < 0
  std::vector<double> beta_A;   // adversary reward per stage, > 0
  double alpha_D = 0.0;         // defender reward on detection, > 0
  std::vector<double> beta_D;   // defender penalty per stage, < 0
  double c1 = 0.0;              // tagging cost per unit traffic, < 0
  double c2 = 0.0;              // trapping cost per unit traffic, < 0
  std::vector<double> gamma;    // cost per security rule, <= 0

  int num_stages() const { return static_cast<int>(beta_A.size()); }

  // Size mismatches against `graph`. Evaluators only need these to hold.
  std::vector<std::string> shape_violations(
      const InformationFlowGraph& graph) const;
  // Shape mismatches plus sign violations.
  std::vector<std::string> violations(const InformationFlowGraph& graph) const;

  void require_shape(const InformationFlowGraph& graph) const;
  void require_valid(const InformationFlowGraph& graph) const;

  // Copy with c1, c2 and every gamma multiplied by `factor`.
  GameParams scaled_costs(double factor) const;

  friend bool operator==(const GameParams&, const GameParams&) = default;
};

// The reference parameter block: beta_A = 100/200/500/1200, alpha_A = -2000,
// alpha_D = 2000, beta_D = -100/-200/-500/-1200, c1 = c2 = gamma_r = -50. For
// M != 4 the per-stage lists take the first M entries and repeat the last.
GameParams default_params(int num_rules, int num_stages);

// C_D(s_i) = c1 B(s_i) and W_D(s_i) = c2 B(s_i).
double tag_cost(const GameParams& params, const InformationFlowGraph& graph,
                NodeId i);
double trap_cost(const GameParams& params, const InformationFlowGraph& graph,
                 NodeId i);

class DefenderStrategy {
 public:
  DefenderStrategy() = default;
  explicit DefenderStrategy(int num_nodes);

  // Every component of every real node set to `p`.
  static DefenderStrategy constant(int num_nodes, double p);

  int num_nodes() const { return n_; }
  int num_components() const { return 2 + n_; }

  double get(NodeId i, int component) const {
    return p_[index(i, component)];
  }
  // Throws ValidationError for s0 or a probability outside [0, 1].
  void set(NodeId i, int component, double p);
  const double* row(NodeId i) const { return &p_[index(i, 0)]; }

  // Row-major (N+1) x (2+N); row 0 is s0 and stays zero.
  const std::vector<double>& values() const { return p_; }

  friend bool operator==(const DefenderStrategy&,
                         const DefenderStrategy&) = default;

 private:
  std::size_t index(NodeId i, int component) const {
    return static_cast<std::size_t>(i) * (2 + n_) + component;
  }

  int n_ = 0;
  std::vector<double> p_;
};

// Product of tag, trap and the probabilities of the rules in `relevance`.
double detection_prob(NodeId i, const DefenderStrategy& defender,
                      const std::vector<int>& relevance);

// detection_prob for every node using the graph's relevance sets; entry 0
// (s0) is 0.
std::vector<double> detection_probs(const InformationFlowGraph& graph,
                                    const DefenderStrategy& defender);

// Result of arriving undetected at `node` during `stage`.
struct Arrival {
  int stage = 1;          // stage after the forced transitions
  int first_crossed = 0;  // stages first_crossed..last_crossed were completed
  int last_crossed = -1;
  bool complete = false;  // stage M was completed
  bool crossed() const { return last_crossed >= first_crossed; }
};
Arrival arrive(const InformationFlowGraph& graph, NodeId node, int stage);

class AdversaryStrategy {
 public:
  AdversaryStrategy() = default;
  // Drops at every decision state. Needs an augmented graph.
  explicit AdversaryStrategy(const InformationFlowGraph& graph);

  // Uniform over successors and drop at every decision state.
  static AdversaryStrategy uniform(const InformationFlowGraph& graph);

  int num_nodes() const { return n_; }
  int num_stages() const { return m_; }

  // True when (i, stage) is a forced transition or completion, i.e. i is a
  // destination of `stage`.
  bool forced(NodeId i, int stage) const {
    return forced_[state(i, stage)] != 0;
  }
  const std::vector<NodeId>& moves(NodeId i) const { return moves_[i]; }

  // Probabilities of moves(i) followed by drop.
  std::span<const double> distribution(NodeId i, int stage) const;
  // Throws ValidationError unless `p` has moves(i).size() + 1 nonnegative
  // entries summing to 1 within 1e-9, or if the state is forced.
  void set_distribution(NodeId i, int stage, std::span<const double> p);
  void set_move(NodeId i, int stage, NodeId target);
  void set_drop(NodeId i, int stage);

  double drop_prob(NodeId i, int stage) const;
  double move_prob(NodeId i, int stage, NodeId target) const;

  friend bool operator==(const AdversaryStrategy&,
                         const AdversaryStrategy&) = default;

 private:
  std::size_t state(NodeId i, int stage) const {
    return static_cast<std::size_t>(i) * m_ + (stage - 1);
  }

  int n_ = 0;
  int m_ = 0;
  std::vector<std::vector<NodeId>> moves_;
  std::vector<char> forced_;
  std::vector<std::size_t> offset_;
  std::vector<double> probs_;
};

// Default path-length bound 4 N M.
int default_max_len(const InformationFlowGraph& graph);

enum class Termination { kDrop, kDetected, kComplete, kTruncated };

struct PathStep {
  NodeId node = 0;
  int stage = 1;  // stage on arrival, before forced transitions
};

// One adversary action sequence from (s0, 1) to a terminal action, with the
// detection and stage-completion mass it carries.
struct PathOutcome {
  std::vector<PathStep> path;
  double path_prob = 1.0;               // product of adversary choice probs
  std::vector<double> survival_probs;   // survival after each step
  std::vector<int> stage_hits;          // completed stages, in order
  std::vector<double> reach_probs;      // per stage; 0 when not completed
  double detection_prob = 0.0;          // 1 - final survival
  Termination termination = Termination::kDrop;
};

// Calls `visit` for every path with positive adversary probability. Paths
// still undecided after `max_len` moves are reported as kTruncated. Throws
// TruncationError once more than `max_paths` paths have been visited.
void for_each_path(const InformationFlowGraph& graph,
                   const DefenderStrategy& defender,
                   const AdversaryStrategy& adversary, int max_len,
                   std::int64_t max_paths,
                   const std::function<void(const PathOutcome&)>& visit);

// Number of paths for_each_path would visit, counting stops at `limit`.
std::int64_t count_paths(const InformationFlowGraph& graph,
                         const AdversaryStrategy& adversary, int max_len,
                         std::int64_t limit);

enum class Estimator { kExact, kMarkov, kMonteCarlo };
const char* estimator_name(Estimator estimator);

struct UtilityReport {
  Estimator estimator = Estimator::kExact;
  std::int64_t n_trials = 0;
  double U_D = 0.0;
  double U_A = 0.0;
  double se_U_D = 0.0;
  double se_U_A = 0.0;
  std::vector<double> p_T;  // detection mass per stage
  std::vector<double> p_R;  // completion mass per stage
  double cost_tag = 0.0;
  double cost_trap = 0.0;
  double cost_rules = 0.0;
  double truncated_mass = 0.0;
  // Utilities assembled path by path from cumulative rewards instead of from
  // p_T and p_R. Filled by the exact and Markov evaluators.
  double U_D_paths = 0.0;
  double U_A_paths = 0.0;
  std::int64_t paths = 0;

  double cost_total() const { return cost_tag + cost_trap + cost_rules; }
};

std::string csv_header(int num_stages);
std::string csv_row(const UtilityReport& report);

struct ExactOptions {
  int max_len = 0;  // 0 means default_max_len
  double eps_trunc = 1e-9;
  std::int64_t max_paths = 20'000'000;
};

// Enumerates every adversary path. Throws TruncationError when the alive mass
// cut off by max_len exceeds eps_trunc or the path count exceeds max_paths.
UtilityReport evaluate_exact(const InformationFlowGraph& graph,
                             const GameParams& params,
                             const DefenderStrategy& defender,
                             const AdversaryStrategy& adversary,
                             const ExactOptions& options = {});

// Same quantities by propagating probability mass over (node, stage) states
// one move at a time; polynomial in the path length and exact up to the
// truncation mass.
UtilityReport evaluate_markov(const InformationFlowGraph& graph,
                              const GameParams& params,
                              const DefenderStrategy& defender,
                              const AdversaryStrategy& adversary,
                              const ExactOptions& options = {});

struct MonteCarloOptions {
  std::int64_t n_trials = 100000;
  std::uint64_t seed = 1;
  int max_len = 0;  // 0 means default_max_len
  int workers = 1;
};

enum class Scenario {
  kDropBeforeFirstStage,
  kDropAfterStage,
  kCompleted,
  kDetected,
};

struct Rollout {
  Scenario scenario = Scenario::kDropBeforeFirstStage;
  int stages_completed = 0;
  int detected_stage = 0;  // stage during which detection hit, 0 if none
  double U_A = 0.0;
  double U_D = 0.0;  // without the strategy-level cost terms
};

// Runs rollouts and averages them. Worker w draws from its own stream seeded
// by (seed, w); trials are split into contiguous blocks per worker.
UtilityReport evaluate_monte_carlo(const InformationFlowGraph& graph,
                                   const GameParams& params,
                                   const DefenderStrategy& defender,
                                   const AdversaryStrategy& adversary,
                                   const MonteCarloOptions& options);

// Calls `visit` with every rollout of a single-stream run.
void for_each_rollout(const InformationFlowGraph& graph,
                      const GameParams& params,
                      const DefenderStrategy& defender,
                      const AdversaryStrategy& adversary,
                      std::int64_t n_trials, std::uint64_t seed, int max_len,
                      const std::function<void(const Rollout&)>& visit);

struct PureOutcome {
  double U_D = 0.0;
  double U_A = 0.0;
  int detected_at = -1;  // index into the path, -1 if never detected
  int stages_completed = 0;
  bool complete = false;
};

// Deterministic utilities when every defender component is 0 or 1 and the
// adversary follows `path`, which starts at s0. Throws InvalidPath when a step
// is not an edge or continues after the attack completed.
PureOutcome evaluate_pure_profile(const InformationFlowGraph& graph,
                                  const GameParams& params,
                                  const DefenderStrategy& defender_bits,
                                  const std::vector<NodeId>& path);

// Expected cost terms of `defender`, written into the cost fields of
// `report`.
void assign_costs(const InformationFlowGraph& graph, const GameParams& params,
                  const DefenderStrategy& defender, UtilityReport& report);

// JSON strategy files; formats in docs/file_formats.md.
std::string serialize_defender(const DefenderStrategy& defender);
DefenderStrategy parse_defender(const std::string& text, int num_nodes);
std::string serialize_adversary(const AdversaryStrategy& adversary);
AdversaryStrategy parse_adversary(const std::string& text,
                                  const InformationFlowGraph& graph);

}  // namespace dift::game

#endif  // DIFT_GAME_HPP_
