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

// Multi-stage play as a game among many small players, learned with
// exponentially weighted internal-regret updates.
//
// The adversary is split into one player per (node, stage) state plus an
// entry player at s0; the defender is split into one two-action player per
// strategy component that takes part in detection. Every adversary player
// receives U_A and every defender player U_D of the realized pure profile.

#ifndef DIFT_LEARN_HPP_
#define DIFT_LEARN_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dift/game.hpp"

namespace dift::learn {

using game::AdversaryStrategy;
using game::DefenderStrategy;
using game::GameParams;
using ifg::InformationFlowGraph;
using ifg::NodeId;

// Action labels of adversary and entry players.
inline constexpr NodeId kDropAction = -1;
inline constexpr NodeId kForcedAction = -2;

enum class PlayerKind { kEntry, kAdversary, kDefender };

struct Player {
  PlayerKind kind = PlayerKind::kAdversary;
  NodeId node = 0;
  int stage = 0;       // adversary players only
  int component = 0;   // defender players only
  // Adversary and entry players: successor ids followed by kDropAction, or
  // the single kForcedAction at a destination of the player's own stage.
  // Defender players: {0, 1}.
  std::vector<NodeId> actions;

  int num_actions() const { return static_cast<int>(actions.size()); }
};

// Player 0 is the entry player, followed by the adversary players in
// (node, stage) order and the defender players in (node, component) order.
class PlayerRoster {
 public:
  const std::vector<Player>& players() const { return players_; }
  int size() const { return static_cast<int>(players_.size()); }
  const Player& operator[](int n) const { return players_[n]; }

  int num_nodes() const { return n_; }
  int num_stages() const { return m_; }
  int num_adversary() const { return n_ * m_ + 1; }  // including the entry
  int num_defender() const { return size() - num_adversary(); }
  int relevance_pairs() const { return num_defender() - 2 * n_; }

  int entry_player() const { return 0; }
  int adversary_player(NodeId i, int stage) const {
    return 1 + (i - 1) * m_ + (stage - 1);
  }
  // -1 when the component does not take part in detection at node i.
  int defender_player(NodeId i, int component) const {
    return defender_index_[static_cast<std::size_t>(i) * (2 + n_) + component];
  }

 private:
  friend PlayerRoster build_roster(const InformationFlowGraph& graph);

  int n_ = 0;
  int m_ = 0;
  std::vector<Player> players_;
  std::vector<int> defender_index_;
};

// Needs an augmented graph. (M + 2) N + Lambda + 1 players.
PlayerRoster build_roster(const InformationFlowGraph& graph);

// One action index per player.
using Profile = std::vector<std::uint16_t>;

struct ProfileOutcome {
  double U_D = 0.0;  // including the cost of the selected components
  double U_A = 0.0;
  std::vector<NodeId> walk;  // from s0; ends at detection, completion or drop
  bool detected = false;
  bool looped = false;  // the adversary players sent the flow around a cycle
  int stages_completed = 0;
};

// Deterministic utilities of pure profiles. A profile whose adversary players
// route the flow back into an already visited (node, stage) state would cycle
// forever; the flow is treated as dropped at that point.
class ProfileEvaluator {
 public:
  ProfileEvaluator(const InformationFlowGraph& graph, const GameParams& params,
                   const PlayerRoster& roster);

  const PlayerRoster& roster() const { return roster_; }

  ProfileOutcome evaluate(const Profile& profile) const;

  // utilities[n][a] = U^n(a, profile_{-n}) for every player n and action a.
  std::vector<std::vector<double>> all_action_utilities(
      const Profile& profile) const;

  // Defender components as 0/1 and the adversary walk, in the form taken by
  // game::evaluate_pure_profile.
  DefenderStrategy defender_bits(const Profile& profile) const;

 private:
  struct Walk {
    double reward_D = 0.0;
    double reward_A = 0.0;
    bool detected = false;
    bool looped = false;
    int stages_completed = 0;
  };
  // Walks the profile with player `override_player` playing
  // `override_action`, collecting the entered nodes and the players whose
  // decisions were used when the output vectors are given.
  Walk walk(const Profile& profile, int override_player, int override_action,
            std::vector<NodeId>* nodes, std::vector<int>* deciders) const;
  bool detects(const Profile& profile, NodeId k, int override_player,
               int override_action) const;
  double cost(const Profile& profile) const;

  const InformationFlowGraph& graph_;
  const GameParams& params_;
  const PlayerRoster& roster_;
  std::vector<std::vector<int>> node_players_;  // defender players per node
  std::vector<double> player_cost_;             // cost of action 1
  mutable std::vector<std::uint32_t> stamp_;
  mutable std::uint32_t generation_ = 0;
};

// Copy of `p` with the mass of action r moved onto action s.
std::vector<double> swap_distribution(std::span<const double> p, int r, int s);

// sum_a p_swapped[a] U^n(a, profile_{-n}).
double expected_swap_utility(const ProfileEvaluator& evaluator, int player,
                             std::span<const double> p_swapped,
                             const Profile& profile);

// Row-stochastic Q for k actions: Q[r][s] = delta[r][s] for r != s and
// Q[r][r] = 1 - sum_s delta[r][s]. `delta` is k x k row-major with a zero
// diagonal.
std::vector<double> swap_matrix(std::span<const double> delta, int k);

struct FixedPointResult {
  std::vector<double> p;
  int sweeps = 0;  // single-step sweeps applied in total
  double residual = 0.0;  // ||p - pQ||_1
};

// Stationary distribution of swap_matrix(delta, k) by power iteration on
// the lazy chain (I + Q) / 2, which has the same fixed points as Q and no
// periodic orbits. Starting from uniform, round t applies 2^t sweeps at once
// through a repeatedly squared matrix; iteration stops when a round moves p
// by at most 1e-12 in L1. Throws NonConvergence once the next round would
// exceed `max_sweeps` sweeps in total.
FixedPointResult fixed_point(std::span<const double> delta, int k,
                             int max_sweeps = 100000);

// The same distribution from a dense solve of (Q^T - I) p = 0, sum p = 1.
// Throws NonConvergence if the solution is not a distribution.
std::vector<double> fixed_point_dense(std::span<const double> delta, int k);

struct LearnerConfig {
  double eta = 0.1;
  double eps = 1e-3;  // on max_n ||p_t,n - p_t-1,n||_inf
  std::int64_t max_iters = 50000;
  std::uint64_t seed = 1;
  bool stop_on_convergence = true;
};

struct TracePoint {
  std::int64_t iteration = 0;
  double U_D_avg = 0.0;  // running mean of the realized utilities
  double U_A_avg = 0.0;
  double max_gap = 0.0;
};

struct JointEntry {
  Profile profile;
  std::int64_t count = 0;
  double prob = 0.0;
};

struct LearnResult {
  std::vector<std::vector<double>> distributions;  // one per player
  std::vector<JointEntry> joint;  // last ceil(t/2) sampled profiles
  std::vector<TracePoint> trace;
  std::int64_t iterations = 0;
  bool converged = false;
  double final_gap = 0.0;
  std::int64_t dense_fallbacks = 0;    // power iteration gave up
  std::int64_t uniform_restarts = 0;   // the dense solve gave up too
};

// Each iteration samples one action per player in index order from a single
// stream, adds the realized swap utilities to the accumulators, reweights the
// swaps and moves every player to the fixed point. When the gap test passes,
// the distributions sampled in the final iteration are returned.
LearnResult run(const InformationFlowGraph& graph, const GameParams& params,
                const LearnerConfig& config = {});

struct RegretEstimate {
  double regret = 0.0;  // max over players and ordered pairs of the gain
  double std_error = 0.0;
  bool exact = true;
  std::int64_t samples = 0;
  int player = -1;
  int from = -1;
  int to = -1;
};

// Swap regret of result.joint. Exact over the support when it has at most
// n_samples profiles; otherwise estimated from n_samples draws.
RegretEstimate swap_regret(const LearnResult& result,
                           const InformationFlowGraph& graph,
                           const GameParams& params, std::int64_t n_samples,
                           std::uint64_t seed);

// Behaviour strategies read off the per-player distributions.
std::pair<DefenderStrategy, AdversaryStrategy> strategies_from_distributions(
    const InformationFlowGraph& graph, const PlayerRoster& roster,
    const std::vector<std::vector<double>>& distributions);

std::string trace_csv_header();
std::string trace_csv_row(const TracePoint& point);

}  // namespace dift::learn

#endif  // DIFT_LEARN_HPP_
