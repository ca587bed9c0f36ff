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

// Utility evaluation: exact path enumeration, step-wise mass propagation,
// Monte Carlo rollouts and deterministic pure profiles.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include "dift/error.hpp"
#include "dift/game.hpp"
#include "random_internal.hpp"

namespace dift::game {
namespace {

// Cumulative stage rewards: cum[j] = sum_{v <= j} beta[v-1], cum[0] = 0.
std::vector<double> cumulative(const std::vector<double>& beta) {
  std::vector<double> cum(beta.size() + 1, 0.0);
  for (std::size_t j = 0; j < beta.size(); ++j) cum[j + 1] = cum[j] + beta[j];
  return cum;
}

void check_inputs(const InformationFlowGraph& graph, const GameParams& params,
                  const DefenderStrategy& defender,
                  const AdversaryStrategy& adversary, const char* caller) {
  ifg::require_augmented(graph, caller);
  params.require_shape(graph);
  if (defender.num_nodes() != graph.num_nodes() ||
      adversary.num_nodes() != graph.num_nodes() ||
      adversary.num_stages() != graph.num_stages()) {
    throw ValidationError(std::string(caller) +
                          ": strategies do not match the graph");
  }
}

void assemble(const GameParams& params, UtilityReport& r) {
  r.U_A = 0.0;
  r.U_D = 0.0;
  for (std::size_t j = 0; j < r.p_T.size(); ++j) {
    r.U_A += r.p_T[j] * params.alpha_A + r.p_R[j] * params.beta_A[j];
    r.U_D += r.p_T[j] * params.alpha_D + r.p_R[j] * params.beta_D[j];
  }
  r.U_D += r.cost_total();
}

class PathEnumerator {
 public:
  PathEnumerator(const InformationFlowGraph& graph,
                 const AdversaryStrategy& adversary, std::vector<double> w,
                 int max_len, std::int64_t max_paths,
                 const std::function<void(const PathOutcome&)>& visit)
      : graph_(graph),
        adversary_(adversary),
        w_(std::move(w)),
        max_len_(max_len),
        max_paths_(max_paths),
        visit_(visit) {
    current_.path.push_back(PathStep{ifg::kSource, 1});
    current_.survival_probs.push_back(1.0);
    current_.reach_probs.assign(graph.num_stages(), 0.0);
  }

  void run() { descend(ifg::kSource, 1, 0); }

 private:
  void emit(double prob, Termination how) {
    if (++visited_ > max_paths_) {
      throw TruncationError(1.0, "path enumeration exceeded " +
                                     std::to_string(max_paths_) + " paths");
    }
    const double saved = current_.path_prob;
    current_.path_prob = prob;
    current_.termination = how;
    current_.detection_prob = 1.0 - current_.survival_probs.back();
    visit_(current_);
    current_.path_prob = saved;
  }

  void descend(NodeId i, int stage, int depth) {
    const auto dist = adversary_.distribution(i, stage);
    const auto& moves = adversary_.moves(i);
    const double prob = current_.path_prob;
    for (std::size_t a = 0; a < moves.size(); ++a) {
      if (dist[a] <= 0.0) continue;
      const double next_prob = prob * dist[a];
      if (depth == max_len_) {
        emit(next_prob, Termination::kTruncated);
        continue;
      }
      const NodeId k = moves[a];
      const double survival = current_.survival_probs.back() * (1.0 - w_[k]);
      current_.path.push_back(PathStep{k, stage});
      current_.survival_probs.push_back(survival);
      const Arrival arrival = arrive(graph_, k, stage);
      for (int s = arrival.first_crossed; s <= arrival.last_crossed; ++s) {
        current_.stage_hits.push_back(s);
        current_.reach_probs[s - 1] = survival;
      }
      current_.path_prob = next_prob;
      if (survival <= 0.0) {
        emit(next_prob, Termination::kDetected);
      } else if (arrival.complete) {
        emit(next_prob, Termination::kComplete);
      } else {
        descend(k, arrival.stage, depth + 1);
      }
      current_.path_prob = prob;
      for (int s = arrival.first_crossed; s <= arrival.last_crossed; ++s) {
        current_.stage_hits.pop_back();
        current_.reach_probs[s - 1] = 0.0;
      }
      current_.path.pop_back();
      current_.survival_probs.pop_back();
    }
    if (dist.back() > 0.0) emit(prob * dist.back(), Termination::kDrop);
  }

  const InformationFlowGraph& graph_;
  const AdversaryStrategy& adversary_;
  const std::vector<double> w_;
  const int max_len_;
  const std::int64_t max_paths_;
  const std::function<void(const PathOutcome&)>& visit_;
  PathOutcome current_;
  std::int64_t visited_ = 0;
};

std::int64_t count_from(const InformationFlowGraph& graph,
                        const AdversaryStrategy& adversary, NodeId i,
                        int stage, int depth, int max_len,
                        std::int64_t limit) {
  const auto dist = adversary.distribution(i, stage);
  const auto& moves = adversary.moves(i);
  std::int64_t total = dist.back() > 0.0 ? 1 : 0;
  for (std::size_t a = 0; a < moves.size() && total < limit; ++a) {
    if (dist[a] <= 0.0) continue;
    if (depth == max_len) {
      ++total;
      continue;
    }
    const Arrival arrival = arrive(graph, moves[a], stage);
    if (arrival.complete) {
      ++total;
    } else {
      total += count_from(graph, adversary, moves[a], arrival.stage, depth + 1,
                          max_len, limit - total);
    }
  }
  return std::min(total, limit);
}

using internal::sample;
using internal::uniform01;

std::mt19937_64 worker_stream(std::uint64_t seed, int worker) {
  return internal::stream(seed, worker);
}

Rollout roll(const InformationFlowGraph& graph, const GameParams& params,
             const AdversaryStrategy& adversary, const std::vector<double>& w,
             int max_len, std::mt19937_64& rng) {
  Rollout out;
  NodeId i = ifg::kSource;
  int stage = 1;
  for (int step = 0; step < max_len; ++step) {
    const auto dist = adversary.distribution(i, stage);
    const std::size_t a = sample(dist, rng);
    if (a + 1 == dist.size()) break;
    const NodeId k = adversary.moves(i)[a];
    if (w[k] >= 1.0 || (w[k] > 0.0 && uniform01(rng) < w[k])) {
      out.scenario = Scenario::kDetected;
      out.detected_stage = stage;
      out.U_A += params.alpha_A;
      out.U_D += params.alpha_D;
      return out;
    }
    const Arrival arrival = arrive(graph, k, stage);
    for (int s = arrival.first_crossed; s <= arrival.last_crossed; ++s) {
      out.U_A += params.beta_A[s - 1];
      out.U_D += params.beta_D[s - 1];
      out.stages_completed = s;
    }
    if (arrival.complete) {
      out.scenario = Scenario::kCompleted;
      return out;
    }
    i = k;
    stage = arrival.stage;
  }
  out.scenario = out.stages_completed == 0 ? Scenario::kDropBeforeFirstStage
                                           : Scenario::kDropAfterStage;
  return out;
}

struct Tally {
  std::vector<std::int64_t> detected;
  std::vector<std::int64_t> reached;
  double sum_a = 0.0;
  double sum_a2 = 0.0;
  double sum_d = 0.0;
  double sum_d2 = 0.0;
};

}  // namespace

void for_each_path(const InformationFlowGraph& graph,
                   const DefenderStrategy& defender,
                   const AdversaryStrategy& adversary, int max_len,
                   std::int64_t max_paths,
                   const std::function<void(const PathOutcome&)>& visit) {
  ifg::require_augmented(graph, "for_each_path");
  PathEnumerator enumerator(graph, adversary, detection_probs(graph, defender),
                            max_len, max_paths, visit);
  enumerator.run();
}

std::int64_t count_paths(const InformationFlowGraph& graph,
                         const AdversaryStrategy& adversary, int max_len,
                         std::int64_t limit) {
  ifg::require_augmented(graph, "count_paths");
  return count_from(graph, adversary, ifg::kSource, 1, 0, max_len, limit);
}

const char* estimator_name(Estimator estimator) {
  switch (estimator) {
    case Estimator::kExact:
      return "exact";
    case Estimator::kMarkov:
      return "markov";
    case Estimator::kMonteCarlo:
      return "monte_carlo";
  }
  return "unknown";
}

std::string csv_header(int num_stages) {
  std::string h = "estimator,n_trials,U_D,U_A,se_U_D,se_U_A";
  for (int j = 1; j <= num_stages; ++j) h += ",p_T_" + std::to_string(j);
  for (int j = 1; j <= num_stages; ++j) h += ",p_R_" + std::to_string(j);
  h += ",cost_tag,cost_trap,cost_rules,truncated_mass";
  return h;
}

std::string csv_row(const UtilityReport& r) {
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return std::string(buf);
  };
  std::string row = estimator_name(r.estimator);
  row += "," + std::to_string(r.n_trials);
  for (double x : {r.U_D, r.U_A, r.se_U_D, r.se_U_A}) row += "," + num(x);
  for (double x : r.p_T) row += "," + num(x);
  for (double x : r.p_R) row += "," + num(x);
  for (double x : {r.cost_tag, r.cost_trap, r.cost_rules, r.truncated_mass}) {
    row += "," + num(x);
  }
  return row;
}

UtilityReport evaluate_exact(const InformationFlowGraph& graph,
                             const GameParams& params,
                             const DefenderStrategy& defender,
                             const AdversaryStrategy& adversary,
                             const ExactOptions& options) {
  check_inputs(graph, params, defender, adversary, "evaluate_exact");
  const int m = graph.num_stages();
  const int max_len =
      options.max_len > 0 ? options.max_len : default_max_len(graph);
  const std::vector<double> cum_a = cumulative(params.beta_A);
  const std::vector<double> cum_d = cumulative(params.beta_D);

  UtilityReport r;
  r.estimator = Estimator::kExact;
  r.p_T.assign(m, 0.0);
  r.p_R.assign(m, 0.0);
  for_each_path(
      graph, defender, adversary, max_len, options.max_paths,
      [&](const PathOutcome& o) {
        ++r.paths;
        const double pi = o.path_prob;
        double path_a = 0.0;
        double path_d = 0.0;
        for (std::size_t t = 1; t < o.path.size(); ++t) {
          const double caught =
              pi * (o.survival_probs[t - 1] - o.survival_probs[t]);
          if (caught == 0.0) continue;
          const int j = o.path[t].stage;
          r.p_T[j - 1] += caught;
          path_a += caught * (params.alpha_A + cum_a[j - 1]);
          path_d += caught * (params.alpha_D + cum_d[j - 1]);
        }
        for (int j = 1; j <= m; ++j) r.p_R[j - 1] += pi * o.reach_probs[j - 1];
        const double alive = pi * o.survival_probs.back();
        const int reached = o.stage_hits.empty() ? 0 : o.stage_hits.back();
        path_a += alive * cum_a[reached];
        path_d += alive * cum_d[reached];
        if (o.termination == Termination::kTruncated) r.truncated_mass += alive;
        r.U_A_paths += path_a;
        r.U_D_paths += path_d;
      });
  if (r.truncated_mass > options.eps_trunc) {
    throw TruncationError(
        r.truncated_mass,
        "paths longer than " + std::to_string(max_len) + " carry mass " +
            std::to_string(r.truncated_mass) + " > eps_trunc");
  }
  assign_costs(graph, params, defender, r);
  assemble(params, r);
  r.U_D_paths += r.cost_total();
  return r;
}

UtilityReport evaluate_markov(const InformationFlowGraph& graph,
                              const GameParams& params,
                              const DefenderStrategy& defender,
                              const AdversaryStrategy& adversary,
                              const ExactOptions& options) {
  check_inputs(graph, params, defender, adversary, "evaluate_markov");
  const int n = graph.num_nodes();
  const int m = graph.num_stages();
  const int max_len =
      options.max_len > 0 ? options.max_len : default_max_len(graph);
  const std::vector<double> w = detection_probs(graph, defender);
  const std::vector<double> cum_a = cumulative(params.beta_A);
  const std::vector<double> cum_d = cumulative(params.beta_D);
  auto at = [m](NodeId i, int stage) {
    return static_cast<std::size_t>(i) * m + (stage - 1);
  };

  UtilityReport r;
  r.estimator = Estimator::kMarkov;
  r.p_T.assign(m, 0.0);
  r.p_R.assign(m, 0.0);
  std::vector<double> mass(static_cast<std::size_t>(n + 1) * m, 0.0);
  std::vector<double> next(mass.size(), 0.0);
  mass[at(ifg::kSource, 1)] = 1.0;
  bool live = true;
  for (int step = 0; step < max_len && live; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    live = false;
    for (NodeId i = 0; i <= n; ++i) {
      for (int j = 1; j <= m; ++j) {
        const double here = mass[at(i, j)];
        if (here == 0.0) continue;
        const auto dist = adversary.distribution(i, j);
        const auto& moves = adversary.moves(i);
        const double dropped = here * dist.back();
        r.U_A_paths += dropped * cum_a[j - 1];
        r.U_D_paths += dropped * cum_d[j - 1];
        for (std::size_t a = 0; a < moves.size(); ++a) {
          if (dist[a] <= 0.0) continue;
          const NodeId k = moves[a];
          const double moving = here * dist[a];
          const double alive = moving * (1.0 - w[k]);
          const double caught = moving - alive;
          r.p_T[j - 1] += caught;
          r.U_A_paths += caught * (params.alpha_A + cum_a[j - 1]);
          r.U_D_paths += caught * (params.alpha_D + cum_d[j - 1]);
          const Arrival arrival = arrive(graph, k, j);
          for (int s = arrival.first_crossed; s <= arrival.last_crossed; ++s) {
            r.p_R[s - 1] += alive;
          }
          if (arrival.complete) {
            r.U_A_paths += alive * cum_a[m];
            r.U_D_paths += alive * cum_d[m];
          } else if (alive > 0.0) {
            next[at(k, arrival.stage)] += alive;
            live = true;
          }
        }
      }
    }
    mass.swap(next);
  }
  for (NodeId i = 0; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const double left = mass[at(i, j)];
      r.truncated_mass += left;
      r.U_A_paths += left * cum_a[j - 1];
      r.U_D_paths += left * cum_d[j - 1];
    }
  }
  if (r.truncated_mass > options.eps_trunc) {
    throw TruncationError(
        r.truncated_mass,
        "walks longer than " + std::to_string(max_len) + " carry mass " +
            std::to_string(r.truncated_mass) + " > eps_trunc");
  }
  assign_costs(graph, params, defender, r);
  assemble(params, r);
  r.U_D_paths += r.cost_total();
  return r;
}

void for_each_rollout(const InformationFlowGraph& graph,
                      const GameParams& params,
                      const DefenderStrategy& defender,
                      const AdversaryStrategy& adversary,
                      std::int64_t n_trials, std::uint64_t seed, int max_len,
                      const std::function<void(const Rollout&)>& visit) {
  check_inputs(graph, params, defender, adversary, "for_each_rollout");
  if (max_len <= 0) max_len = default_max_len(graph);
  const std::vector<double> w = detection_probs(graph, defender);
  std::mt19937_64 rng = worker_stream(seed, 0);
  for (std::int64_t t = 0; t < n_trials; ++t) {
    visit(roll(graph, params, adversary, w, max_len, rng));
  }
}

UtilityReport evaluate_monte_carlo(const InformationFlowGraph& graph,
                                   const GameParams& params,
                                   const DefenderStrategy& defender,
                                   const AdversaryStrategy& adversary,
                                   const MonteCarloOptions& options) {
  check_inputs(graph, params, defender, adversary, "evaluate_monte_carlo");
  if (options.n_trials < 1) {
    throw ValidationError("evaluate_monte_carlo needs n_trials >= 1");
  }
  const int m = graph.num_stages();
  const int max_len =
      options.max_len > 0 ? options.max_len : default_max_len(graph);
  const int workers = static_cast<int>(std::clamp<std::int64_t>(
      options.workers, 1, options.n_trials));
  const std::vector<double> w = detection_probs(graph, defender);

  std::vector<Tally> tallies(workers);
  auto work = [&](int worker) {
    Tally& t = tallies[worker];
    t.detected.assign(m, 0);
    t.reached.assign(m, 0);
    const std::int64_t begin = options.n_trials * worker / workers;
    const std::int64_t end = options.n_trials * (worker + 1) / workers;
    std::mt19937_64 rng = worker_stream(options.seed, worker);
    for (std::int64_t k = begin; k < end; ++k) {
      const Rollout o = roll(graph, params, adversary, w, max_len, rng);
      if (o.detected_stage > 0) ++t.detected[o.detected_stage - 1];
      for (int s = 1; s <= o.stages_completed; ++s) ++t.reached[s - 1];
      t.sum_a += o.U_A;
      t.sum_a2 += o.U_A * o.U_A;
      t.sum_d += o.U_D;
      t.sum_d2 += o.U_D * o.U_D;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int k = 0; k < workers; ++k) threads.emplace_back(work, k);
    for (auto& th : threads) th.join();
  }

  UtilityReport r;
  r.estimator = Estimator::kMonteCarlo;
  r.n_trials = options.n_trials;
  r.p_T.assign(m, 0.0);
  r.p_R.assign(m, 0.0);
  Tally total;
  total.detected.assign(m, 0);
  total.reached.assign(m, 0);
  for (const Tally& t : tallies) {
    for (int j = 0; j < m; ++j) {
      total.detected[j] += t.detected[j];
      total.reached[j] += t.reached[j];
    }
    total.sum_a += t.sum_a;
    total.sum_a2 += t.sum_a2;
    total.sum_d += t.sum_d;
    total.sum_d2 += t.sum_d2;
  }
  const auto n = static_cast<double>(options.n_trials);
  for (int j = 0; j < m; ++j) {
    r.p_T[j] = static_cast<double>(total.detected[j]) / n;
    r.p_R[j] = static_cast<double>(total.reached[j]) / n;
  }
  auto std_error = [n](double sum, double sum2) {
    if (n < 2) return 0.0;
    const double mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
  };
  r.se_U_A = std_error(total.sum_a, total.sum_a2);
  r.se_U_D = std_error(total.sum_d, total.sum_d2);
  assign_costs(graph, params, defender, r);
  assemble(params, r);
  return r;
}

PureOutcome evaluate_pure_profile(const InformationFlowGraph& graph,
                                  const GameParams& params,
                                  const DefenderStrategy& defender_bits,
                                  const std::vector<NodeId>& path) {
  ifg::require_augmented(graph, "evaluate_pure_profile");
  params.require_shape(graph);
  if (defender_bits.num_nodes() != graph.num_nodes()) {
    throw ValidationError("defender profile does not match the graph");
  }
  for (double b : defender_bits.values()) {
    if (b != 0.0 && b != 1.0) {
      throw ValidationError("defender profile entries must be 0 or 1");
    }
  }
  if (path.empty() || path.front() != ifg::kSource) {
    throw InvalidPath("adversary path must start at s0");
  }

  PureOutcome out;
  UtilityReport costs;
  assign_costs(graph, params, defender_bits, costs);
  out.U_D = costs.cost_total();

  // Structural pass: every step is an edge and nothing follows completion.
  int stage = 1;
  bool complete = false;
  for (std::size_t t = 1; t < path.size(); ++t) {
    const NodeId from = path[t - 1];
    const NodeId to = path[t];
    if (complete) {
      throw InvalidPath("adversary path continues after completing stage " +
                        std::to_string(graph.num_stages()));
    }
    if (to < 0 || to > graph.num_nodes() || from < 0 ||
        from > graph.num_nodes() ||
        !std::binary_search(graph.successors(from).begin(),
                            graph.successors(from).end(), to)) {
      throw InvalidPath("step " + std::to_string(t) + " (" +
                        std::to_string(from) + " -> " + std::to_string(to) +
                        ") is not an edge");
    }
    const Arrival arrival = arrive(graph, to, stage);
    complete = arrival.complete;
    stage = arrival.stage;
  }

  const std::vector<double> w = detection_probs(graph, defender_bits);
  stage = 1;
  for (std::size_t t = 1; t < path.size(); ++t) {
    const NodeId k = path[t];
    if (w[k] == 1.0) {
      out.detected_at = static_cast<int>(t);
      out.U_A += params.alpha_A;
      out.U_D += params.alpha_D;
      return out;
    }
    const Arrival arrival = arrive(graph, k, stage);
    for (int s = arrival.first_crossed; s <= arrival.last_crossed; ++s) {
      out.U_A += params.beta_A[s - 1];
      out.U_D += params.beta_D[s - 1];
      out.stages_completed = s;
    }
    out.complete = arrival.complete;
    stage = arrival.stage;
  }
  return out;
}

}  // namespace dift::game
