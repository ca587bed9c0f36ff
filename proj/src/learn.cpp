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

#include "dift/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <Eigen/Dense>

#include "dift/error.hpp"
#include "dift/kernels.hpp"
#include "random_internal.hpp"

namespace dift::learn {
namespace {

constexpr double kFixedPointStep = 1e-12;
constexpr double kResidualLimit = 1e-10;

std::string profile_key(const Profile& profile) {
  return std::string(reinterpret_cast<const char*>(profile.data()),
                     profile.size() * sizeof(Profile::value_type));
}

void require_distribution(std::span<const double> p, int player) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) {
      throw Error("learner produced a negative probability for player " +
                  std::to_string(player));
    }
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw Error("learner distribution of player " + std::to_string(player) +
                " sums to " + std::to_string(sum));
  }
}

}  // namespace

PlayerRoster build_roster(const InformationFlowGraph& graph) {
  ifg::require_augmented(graph, "build_roster");
  PlayerRoster roster;
  const int n = graph.num_nodes();
  const int m = graph.num_stages();
  roster.n_ = n;
  roster.m_ = m;

  Player entry;
  entry.kind = PlayerKind::kEntry;
  entry.stage = 1;
  entry.actions = graph.successors(ifg::kSource);
  entry.actions.push_back(kDropAction);
  roster.players_.push_back(std::move(entry));

  for (NodeId i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      Player p;
      p.kind = PlayerKind::kAdversary;
      p.node = i;
      p.stage = j;
      if (graph.is_destination(i, j)) {
        p.actions = {kForcedAction};
      } else {
        p.actions = graph.successors(i);
        p.actions.push_back(kDropAction);
      }
      roster.players_.push_back(std::move(p));
    }
  }

  roster.defender_index_.assign(static_cast<std::size_t>(n + 1) * (2 + n), -1);
  for (NodeId i = 1; i <= n; ++i) {
    std::vector<int> components = {game::kTag, game::kTrap};
    for (int r : graph.rules(i)) components.push_back(game::rule_component(r));
    for (int c : components) {
      roster.defender_index_[static_cast<std::size_t>(i) * (2 + n) + c] =
          static_cast<int>(roster.players_.size());
      Player p;
      p.kind = PlayerKind::kDefender;
      p.node = i;
      p.component = c;
      p.actions = {0, 1};
      roster.players_.push_back(std::move(p));
    }
  }
  return roster;
}

ProfileEvaluator::ProfileEvaluator(const InformationFlowGraph& graph,
                                   const GameParams& params,
                                   const PlayerRoster& roster)
    : graph_(graph), params_(params), roster_(roster) {
  ifg::require_augmented(graph, "ProfileEvaluator");
  params.require_shape(graph);
  if (roster.num_nodes() != graph.num_nodes() ||
      roster.num_stages() != graph.num_stages()) {
    throw ValidationError("player roster does not match the graph");
  }
  node_players_.resize(graph.num_nodes() + 1);
  player_cost_.assign(roster.size(), 0.0);
  for (int n = 0; n < roster.size(); ++n) {
    const Player& p = roster[n];
    if (p.kind != PlayerKind::kDefender) continue;
    node_players_[p.node].push_back(n);
    if (p.component == game::kTag) {
      player_cost_[n] = game::tag_cost(params, graph, p.node);
    } else if (p.component == game::kTrap) {
      player_cost_[n] = game::trap_cost(params, graph, p.node);
    } else {
      player_cost_[n] = params.gamma[p.component - 2];
    }
  }
  stamp_.assign(static_cast<std::size_t>(graph.num_nodes() + 1) *
                    graph.num_stages(),
                0);
}

bool ProfileEvaluator::detects(const Profile& profile, NodeId k,
                               int override_player, int override_action) const {
  for (int n : node_players_[k]) {
    const int a = n == override_player ? override_action : profile[n];
    if (a == 0) return false;
  }
  return true;
}

double ProfileEvaluator::cost(const Profile& profile) const {
  double total = 0.0;
  for (int n = roster_.num_adversary(); n < roster_.size(); ++n) {
    if (profile[n] == 1) total += player_cost_[n];
  }
  return total;
}

ProfileEvaluator::Walk ProfileEvaluator::walk(const Profile& profile,
                                              int override_player,
                                              int override_action,
                                              std::vector<NodeId>* nodes,
                                              std::vector<int>* deciders) const {
  if (++generation_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    generation_ = 1;
  }
  auto action = [&](int n) {
    return n == override_player ? override_action : profile[n];
  };
  Walk w;
  const int m = graph_.num_stages();
  const int entry = roster_.entry_player();
  if (nodes) nodes->push_back(ifg::kSource);
  if (deciders) deciders->push_back(entry);
  NodeId next = roster_[entry].actions[action(entry)];
  int stage = 1;
  while (next != kDropAction) {
    const NodeId k = next;
    if (nodes) nodes->push_back(k);
    if (detects(profile, k, override_player, override_action)) {
      w.detected = true;
      w.reward_A += params_.alpha_A;
      w.reward_D += params_.alpha_D;
      return w;
    }
    const game::Arrival arrival = game::arrive(graph_, k, stage);
    for (int s = arrival.first_crossed; s <= arrival.last_crossed; ++s) {
      w.reward_A += params_.beta_A[s - 1];
      w.reward_D += params_.beta_D[s - 1];
      w.stages_completed = s;
    }
    if (arrival.complete) return w;
    stage = arrival.stage;
    const std::size_t state = static_cast<std::size_t>(k) * m + (stage - 1);
    if (stamp_[state] == generation_) {
      w.looped = true;
      return w;
    }
    stamp_[state] = generation_;
    const int n = roster_.adversary_player(k, stage);
    if (deciders) deciders->push_back(n);
    next = roster_[n].actions[action(n)];
  }
  return w;
}

ProfileOutcome ProfileEvaluator::evaluate(const Profile& profile) const {
  ProfileOutcome out;
  const Walk w = walk(profile, -1, 0, &out.walk, nullptr);
  out.U_A = w.reward_A;
  out.U_D = w.reward_D + cost(profile);
  out.detected = w.detected;
  out.looped = w.looped;
  out.stages_completed = w.stages_completed;
  return out;
}

std::vector<std::vector<double>> ProfileEvaluator::all_action_utilities(
    const Profile& profile) const {
  std::vector<NodeId> nodes;
  std::vector<int> deciders;
  const Walk base = walk(profile, -1, 0, &nodes, &deciders);
  const double base_cost = cost(profile);
  const double base_D = base.reward_D + base_cost;

  std::vector<std::vector<double>> out(roster_.size());
  for (int n = 0; n < roster_.num_adversary(); ++n) {
    out[n].assign(roster_[n].num_actions(), base.reward_A);
  }
  for (int n : deciders) {
    for (int a = 0; a < roster_[n].num_actions(); ++a) {
      if (a != profile[n]) out[n][a] = walk(profile, n, a, nullptr, nullptr).reward_A;
    }
  }

  std::vector<char> entered(graph_.num_nodes() + 1, 0);
  for (std::size_t t = 1; t < nodes.size(); ++t) entered[nodes[t]] = 1;
  for (int n = roster_.num_adversary(); n < roster_.size(); ++n) {
    const Player& p = roster_[n];
    const int current = profile[n];
    out[n].assign(2, base_D);
    const int other = 1 - current;
    double value = base_D + (other - current) * player_cost_[n];
    if (entered[p.node] && detects(profile, p.node, -1, 0) !=
                               detects(profile, p.node, n, other)) {
      value += walk(profile, n, other, nullptr, nullptr).reward_D -
               base.reward_D;
    }
    out[n][other] = value;
  }
  return out;
}

DefenderStrategy ProfileEvaluator::defender_bits(const Profile& profile) const {
  DefenderStrategy bits(graph_.num_nodes());
  for (int n = roster_.num_adversary(); n < roster_.size(); ++n) {
    if (profile[n] == 1) bits.set(roster_[n].node, roster_[n].component, 1.0);
  }
  return bits;
}

std::vector<double> swap_distribution(std::span<const double> p, int r,
                                      int s) {
  const int k = static_cast<int>(p.size());
  if (r == s || r < 0 || s < 0 || r >= k || s >= k) {
    throw ValidationError("swap needs two distinct actions of the player");
  }
  std::vector<double> out(p.begin(), p.end());
  out[s] += out[r];
  out[r] = 0.0;
  return out;
}

double expected_swap_utility(const ProfileEvaluator& evaluator, int player,
                             std::span<const double> p_swapped,
                             const Profile& profile) {
  const std::vector<double> u = evaluator.all_action_utilities(profile)[player];
  if (u.size() != p_swapped.size()) {
    throw ValidationError("distribution does not match the player's actions");
  }
  double total = 0.0;
  for (std::size_t a = 0; a < u.size(); ++a) total += p_swapped[a] * u[a];
  return total;
}

std::vector<double> swap_matrix(std::span<const double> delta, int k) {
  if (static_cast<int>(delta.size()) != k * k) {
    throw ValidationError("swap weights must be a k x k matrix");
  }
  std::vector<double> q(delta.begin(), delta.end());
  for (int r = 0; r < k; ++r) {
    double out = 0.0;
    for (int s = 0; s < k; ++s) {
      if (s != r) out += q[r * k + s];
    }
    q[r * k + r] = 1.0 - out;
  }
  return q;
}

FixedPointResult fixed_point(std::span<const double> delta, int k,
                             int max_sweeps) {
  const std::vector<double> q = swap_matrix(delta, k);
  // power[r] holds row r of (I + Q)^(2^round) / 2^(2^round).
  std::vector<double> power(q.size());
  for (int r = 0; r < k; ++r) {
    for (int s = 0; s < k; ++s) {
      power[r * k + s] = 0.5 * q[r * k + s] + (r == s ? 0.5 : 0.0);
    }
  }
  FixedPointResult out;
  out.p.assign(k, 1.0 / k);
  std::vector<double> next(k);
  std::vector<double> squared(q.size());
  std::int64_t applied = 0;
  std::int64_t stride = 1;
  while (applied + stride <= max_sweeps) {
    simd::row_times_matrix(out.p.data(), power.data(), k, next.data());
    applied += stride;
    const double step = simd::l1_distance(out.p.data(), next.data(), k);
    out.p.swap(next);
    if (step <= kFixedPointStep) {
      out.sweeps = static_cast<int>(applied);
      const double sum = std::accumulate(out.p.begin(), out.p.end(), 0.0);
      for (double& x : out.p) x /= sum;
      simd::row_times_matrix(out.p.data(), q.data(), k, next.data());
      out.residual = simd::l1_distance(out.p.data(), next.data(), k);
      return out;
    }
    for (int r = 0; r < k; ++r) {
      simd::row_times_matrix(&power[r * k], power.data(), k, &squared[r * k]);
    }
    power.swap(squared);
    stride *= 2;
  }
  throw NonConvergence("fixed point not reached within " +
                       std::to_string(max_sweeps) + " sweeps");
}

std::vector<double> fixed_point_dense(std::span<const double> delta, int k) {
  const std::vector<double> q = swap_matrix(delta, k);
  Eigen::MatrixXd a(k, k);
  for (int r = 0; r < k; ++r) {
    for (int s = 0; s < k; ++s) a(s, r) = q[r * k + s] - (r == s ? 1.0 : 0.0);
  }
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1) = 1.0;
  const Eigen::VectorXd x = a.fullPivLu().solve(b);
  if (!x.allFinite() || (a * x - b).lpNorm<1>() > 1e-9 ||
      x.minCoeff() < -1e-12) {
    throw NonConvergence("dense fixed-point solve failed");
  }
  std::vector<double> p(k);
  for (int r = 0; r < k; ++r) p[r] = std::max(0.0, x(r));
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= sum;
  return p;
}

LearnResult run(const InformationFlowGraph& graph, const GameParams& params,
                const LearnerConfig& config) {
  ifg::require_augmented(graph, "learn::run");
  params.require_shape(graph);
  if (!(config.eta > 0.0) || !(config.eps > 0.0) || config.max_iters < 1) {
    throw ParamError("learner needs eta > 0, eps > 0 and max_iters >= 1");
  }
  const PlayerRoster roster = build_roster(graph);
  const ProfileEvaluator evaluator(graph, params, roster);
  const int players = roster.size();

  // Two-action players run through the vector kernel; larger ones keep a
  // full swap accumulator.
  std::vector<int> binary;
  std::vector<int> general;
  for (int n = 0; n < players; ++n) {
    if (roster[n].num_actions() == 2) binary.push_back(n);
    if (roster[n].num_actions() > 2) general.push_back(n);
  }
  const std::size_t nb = binary.size();
  std::vector<double> g01(nb, 0.0), g10(nb, 0.0), p1(nb, 0.5), u0(nb), u1(nb);
  const simd::BinarySwapBatch batch{g01.data(), g10.data(), p1.data(),
                                    u0.data(),  u1.data(),  nb};

  std::vector<std::vector<double>> dist(players);
  std::vector<std::vector<double>> swaps(players);
  for (int n = 0; n < players; ++n) {
    const int k = roster[n].num_actions();
    dist[n].assign(k, 1.0 / k);
    if (k > 2) swaps[n].assign(static_cast<std::size_t>(k) * k, 0.0);
  }

  LearnResult result;
  std::mt19937_64 rng = internal::stream(config.seed, 0);
  Profile profile(players, 0);
  std::unordered_map<std::string, int> intern;
  std::vector<Profile> distinct;
  std::vector<int> history;
  double sum_D = 0.0;
  double sum_A = 0.0;
  std::vector<std::vector<double>> previous;
  std::vector<double> previous_p1;
  std::vector<double> delta;

  for (std::int64_t t = 1; t <= config.max_iters; ++t) {
    for (std::size_t b = 0; b < nb; ++b) dist[binary[b]] = {1.0 - p1[b], p1[b]};
    for (int n = 0; n < players; ++n) {
      profile[n] = roster[n].num_actions() == 1
                       ? 0
                       : static_cast<std::uint16_t>(
                             internal::sample(dist[n], rng));
    }
    const auto utilities = evaluator.all_action_utilities(profile);
    sum_A += utilities[roster.entry_player()][profile[roster.entry_player()]];
    const int some_defender = roster.num_adversary();
    sum_D += utilities[some_defender][profile[some_defender]];

    auto [it, inserted] =
        intern.emplace(profile_key(profile), static_cast<int>(distinct.size()));
    if (inserted) distinct.push_back(profile);
    history.push_back(it->second);

    previous = dist;
    previous_p1 = p1;
    for (std::size_t b = 0; b < nb; ++b) {
      u0[b] = utilities[binary[b]][0];
      u1[b] = utilities[binary[b]][1];
    }
    double gap = simd::binary_swap_step(batch, config.eta);

    for (int n : general) {
      const int k = roster[n].num_actions();
      const std::vector<double>& u = utilities[n];
      std::vector<double>& p = dist[n];
      std::vector<double>& g = swaps[n];
      double mean = 0.0;
      for (int a = 0; a < k; ++a) mean += p[a] * u[a];
      double top = -std::numeric_limits<double>::infinity();
      for (int r = 0; r < k; ++r) {
        for (int s = 0; s < k; ++s) {
          if (r == s) continue;
          g[r * k + s] += mean + p[r] * (u[s] - u[r]);
          top = std::max(top, g[r * k + s]);
        }
      }
      delta.assign(static_cast<std::size_t>(k) * k, 0.0);
      double total = 0.0;
      for (int r = 0; r < k; ++r) {
        for (int s = 0; s < k; ++s) {
          if (r == s) continue;
          delta[r * k + s] = std::exp(config.eta * (g[r * k + s] - top));
          total += delta[r * k + s];
        }
      }
      for (double& x : delta) x /= total;

      std::vector<double> next;
      try {
        FixedPointResult fp = fixed_point(delta, k);
        if (fp.residual > kResidualLimit) {
          throw NonConvergence("fixed-point residual too large");
        }
        next = std::move(fp.p);
      } catch (const NonConvergence&) {
        ++result.dense_fallbacks;
        try {
          next = fixed_point_dense(delta, k);
        } catch (const NonConvergence&) {
          ++result.uniform_restarts;
          next.assign(k, 1.0 / k);
        }
      }
      gap = std::max(gap, simd::max_abs_diff(p.data(), next.data(), k));
      p = std::move(next);
      require_distribution(p, n);
    }
    for (std::size_t b = 0; b < nb; ++b) {
      if (!(p1[b] >= 0.0 && p1[b] <= 1.0)) {
        require_distribution(std::vector<double>{1.0 - p1[b], p1[b]},
                             binary[b]);
      }
    }

    const double td = static_cast<double>(t);
    result.trace.push_back(TracePoint{t, sum_D / td, sum_A / td, gap});
    result.iterations = t;
    result.final_gap = gap;
    if (config.stop_on_convergence && gap <= config.eps) {
      result.converged = true;
      dist = std::move(previous);
      p1 = std::move(previous_p1);
      break;
    }
  }
  for (std::size_t b = 0; b < nb; ++b) dist[binary[b]] = {1.0 - p1[b], p1[b]};
  result.distributions = std::move(dist);

  // Empirical joint distribution over the second half of the run.
  const std::size_t window = (history.size() + 1) / 2;
  std::vector<std::int64_t> counts(distinct.size(), 0);
  for (std::size_t t = history.size() - window; t < history.size(); ++t) {
    ++counts[history[t]];
  }
  for (std::size_t id = 0; id < distinct.size(); ++id) {
    if (counts[id] == 0) continue;
    result.joint.push_back(JointEntry{
        distinct[id], counts[id],
        static_cast<double>(counts[id]) / static_cast<double>(window)});
  }
  return result;
}

RegretEstimate swap_regret(const LearnResult& result,
                           const InformationFlowGraph& graph,
                           const GameParams& params, std::int64_t n_samples,
                           std::uint64_t seed) {
  if (result.joint.empty()) {
    throw ValidationError("swap_regret needs a nonempty joint distribution");
  }
  if (n_samples < 2) throw ParamError("swap_regret needs n_samples >= 2");
  const PlayerRoster roster = build_roster(graph);
  const ProfileEvaluator evaluator(graph, params, roster);
  const int players = roster.size();

  // Weight of every support profile: its probability, or its share of the
  // draws when sampling.
  RegretEstimate out;
  std::vector<double> weight(result.joint.size());
  if (static_cast<std::int64_t>(result.joint.size()) <= n_samples) {
    for (std::size_t e = 0; e < weight.size(); ++e) {
      weight[e] = result.joint[e].prob;
    }
  } else {
    out.exact = false;
    out.samples = n_samples;
    std::vector<double> probs(result.joint.size());
    for (std::size_t e = 0; e < probs.size(); ++e) {
      probs[e] = result.joint[e].prob;
    }
    std::vector<double> cdf(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cdf.begin());
    std::mt19937_64 rng = internal::stream(seed, 0);
    for (std::int64_t d = 0; d < n_samples; ++d) {
      const double u = internal::uniform01(rng) * cdf.back();
      const auto pos = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      weight[std::min<std::size_t>(pos, cdf.size() - 1)] += 1.0;
    }
    for (double& w : weight) w /= static_cast<double>(n_samples);
  }

  std::vector<std::vector<double>> sum(players);
  std::vector<std::vector<double>> sum_sq(players);
  for (int n = 0; n < players; ++n) {
    const std::size_t k = roster[n].num_actions();
    sum[n].assign(k * k, 0.0);
    sum_sq[n].assign(k * k, 0.0);
  }
  for (std::size_t e = 0; e < weight.size(); ++e) {
    if (weight[e] == 0.0) continue;
    const Profile& profile = result.joint[e].profile;
    const auto utilities = evaluator.all_action_utilities(profile);
    for (int n = 0; n < players; ++n) {
      const int k = roster[n].num_actions();
      const int r = profile[n];
      for (int s = 0; s < k; ++s) {
        if (s == r) continue;
        const double x = utilities[n][s] - utilities[n][r];
        sum[n][r * k + s] += weight[e] * x;
        sum_sq[n][r * k + s] += weight[e] * x * x;
      }
    }
  }

  bool any = false;
  for (int n = 0; n < players; ++n) {
    const int k = roster[n].num_actions();
    for (int r = 0; r < k; ++r) {
      for (int s = 0; s < k; ++s) {
        if (r == s) continue;
        const double gain = sum[n][r * k + s];
        if (any && gain <= out.regret) continue;
        any = true;
        out.regret = gain;
        out.player = n;
        out.from = r;
        out.to = s;
        if (!out.exact) {
          const double var = std::max(0.0, sum_sq[n][r * k + s] - gain * gain);
          out.std_error = std::sqrt(var / static_cast<double>(n_samples - 1));
        }
      }
    }
  }
  return out;
}

std::pair<DefenderStrategy, AdversaryStrategy> strategies_from_distributions(
    const InformationFlowGraph& graph, const PlayerRoster& roster,
    const std::vector<std::vector<double>>& distributions) {
  if (static_cast<int>(distributions.size()) != roster.size()) {
    throw ValidationError("one distribution per player is required");
  }
  DefenderStrategy defender(graph.num_nodes());
  AdversaryStrategy adversary(graph);
  for (int n = 0; n < roster.size(); ++n) {
    const Player& p = roster[n];
    const std::vector<double>& d = distributions[n];
    if (static_cast<int>(d.size()) != p.num_actions()) {
      throw ValidationError("distribution of player " + std::to_string(n) +
                            " has the wrong number of actions");
    }
    switch (p.kind) {
      case PlayerKind::kDefender:
        defender.set(p.node, p.component, d[1]);
        break;
      case PlayerKind::kEntry:
        adversary.set_distribution(ifg::kSource, 1, d);
        break;
      case PlayerKind::kAdversary:
        if (p.actions.front() != kForcedAction) {
          adversary.set_distribution(p.node, p.stage, d);
        }
        break;
    }
  }
  return {std::move(defender), std::move(adversary)};
}

std::string trace_csv_header() { return "iteration,U_D_avg,U_A_avg,max_gap"; }

std::string trace_csv_row(const TracePoint& point) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g,%.12g",
                static_cast<long long>(point.iteration), point.U_D_avg,
                point.U_A_avg, point.max_gap);
  return buf;
}

}  // namespace dift::learn
