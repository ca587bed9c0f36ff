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

#include "dift/respond.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dift/error.hpp"

namespace dift::respond {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A tentative shortest path. Ties on cost break on hop count and then on the
// lexicographically smallest node sequence.
struct Label {
  bool reached = false;
  double cost = 0.0;
  std::vector<NodeId> walk;
};

bool better(const Label& a, const Label& b) {
  if (!a.reached) return false;
  if (!b.reached) return true;
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.walk.size() != b.walk.size()) return a.walk.size() < b.walk.size();
  return a.walk < b.walk;
}

std::vector<double> edge_weights(const std::vector<double>& w,
                                 WeightMode mode) {
  std::vector<double> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (mode == WeightMode::kAdditive) {
      out[k] = w[k];
    } else {
      out[k] = w[k] >= 1.0 ? kInf : -std::log1p(-w[k]);
    }
  }
  return out;
}

double survival(const std::vector<NodeId>& walk, const std::vector<double>& w,
                std::size_t from = 1) {
  double p = 1.0;
  for (std::size_t t = from; t < walk.size(); ++t) p *= 1.0 - w[walk[t]];
  return p;
}

// Index of the unsettled label that is best, or -1.
int pick(const std::vector<Label>& labels, const std::vector<char>& done) {
  int best = -1;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (done[s] || !labels[s].reached) continue;
    if (best < 0 || better(labels[s], labels[best])) best = static_cast<int>(s);
  }
  return best;
}

void relax(std::vector<Label>& labels, const std::vector<char>& done,
           std::size_t target, const Label& from, double weight, NodeId node) {
  if (done[target]) return;
  Label candidate;
  candidate.reached = true;
  candidate.cost = from.cost + weight;
  candidate.walk = from.walk;
  if (node >= 0) candidate.walk.push_back(node);
  if (better(candidate, labels[target])) labels[target] = std::move(candidate);
}

// Shortest paths over the (node, stage) graph from (s0, 1). Destinations of
// the current stage only lead to the next stage copy of themselves.
std::vector<Label> layered_paths(const InformationFlowGraph& graph,
                                 const std::vector<double>& weight) {
  const int n = graph.num_nodes();
  const int m = graph.num_stages();
  auto id = [m](NodeId i, int j) {
    return static_cast<std::size_t>(i) * m + (j - 1);
  };
  std::vector<Label> labels(static_cast<std::size_t>(n + 1) * m);
  std::vector<char> done(labels.size(), 0);
  labels[id(ifg::kSource, 1)] = Label{true, 0.0, {ifg::kSource}};
  for (int u; (u = pick(labels, done)) >= 0;) {
    done[u] = 1;
    const NodeId i = u / m;
    const int j = u % m + 1;
    if (i != ifg::kSource && graph.is_destination(i, j)) {
      if (j < m) relax(labels, done, id(i, j + 1), labels[u], 0.0, -1);
      continue;
    }
    for (NodeId k : graph.successors(i)) {
      relax(labels, done, id(k, j), labels[u], weight[k], k);
    }
  }
  return labels;
}

// Shortest paths within the copy of stage `stage` starting at `start`, where
// destinations of that stage absorb.
std::vector<Label> segment_paths(const InformationFlowGraph& graph,
                                 const std::vector<double>& weight,
                                 NodeId start, int stage) {
  const int n = graph.num_nodes();
  std::vector<Label> labels(n + 1);
  std::vector<char> done(n + 1, 0);
  labels[start] = Label{true, 0.0, {start}};
  for (int u; (u = pick(labels, done)) >= 0;) {
    done[u] = 1;
    if (u != start && graph.is_destination(u, stage)) continue;
    for (NodeId k : graph.successors(u)) {
      relax(labels, done, k, labels[u], weight[k], k);
    }
  }
  return labels;
}

struct Choice {
  bool stop = true;
  NodeId next = -1;                 // destination of the next stage
  std::vector<NodeId> segment;      // nodes entered to reach it
};

}  // namespace

std::vector<game::PathStep> stage_path(const InformationFlowGraph& graph,
                                       const std::vector<NodeId>& walk) {
  std::vector<game::PathStep> out;
  if (walk.empty()) return out;
  out.push_back(game::PathStep{walk.front(), 1});
  int stage = 1;
  for (std::size_t t = 1; t < walk.size(); ++t) {
    out.push_back(game::PathStep{walk[t], stage});
    stage = game::arrive(graph, walk[t], stage).stage;
  }
  return out;
}

AdversaryStrategy strategy_from_walk(const InformationFlowGraph& graph,
                                     const std::vector<NodeId>& walk) {
  if (walk.empty() || walk.front() != ifg::kSource) {
    throw InvalidPath("walk must start at s0");
  }
  AdversaryStrategy out(graph);
  const int m = graph.num_stages();
  std::vector<NodeId> chosen(static_cast<std::size_t>(graph.num_nodes() + 1) * m,
                             -1);
  int stage = 1;
  bool complete = false;
  for (std::size_t t = 0; t + 1 < walk.size(); ++t) {
    const NodeId i = walk[t];
    const NodeId k = walk[t + 1];
    if (complete) throw InvalidPath("walk continues after the attack completed");
    NodeId& slot = chosen[static_cast<std::size_t>(i) * m + (stage - 1)];
    if (slot >= 0 && slot != k) {
      throw InvalidPath("walk leaves state (" + std::to_string(i) + ", " +
                        std::to_string(stage) + ") in two directions");
    }
    slot = k;
    try {
      out.set_move(i, stage, k);
    } catch (const ValidationError& e) {
      throw InvalidPath(e.what());
    }
    const game::Arrival arrival = game::arrive(graph, k, stage);
    stage = arrival.stage;
    complete = arrival.complete;
  }
  if (!complete &&
      chosen[static_cast<std::size_t>(walk.back()) * m + (stage - 1)] >= 0) {
    throw InvalidPath("walk ends in a state it already left");
  }
  return out;
}

AdversaryBestResponse adversary_best_response(
    const InformationFlowGraph& graph, const GameParams& params,
    const DefenderStrategy& defender, const BestResponseOptions& options) {
  ifg::require_augmented(graph, "adversary_best_response");
  params.require_shape(graph);
  const int m = graph.num_stages();
  const double alpha = params.alpha_A;
  const std::vector<double> w = game::detection_probs(graph, defender);
  const std::vector<double> weight = edge_weights(w, options.weights);

  const std::vector<Label> layered = layered_paths(graph, weight);
  auto layered_at = [&](NodeId i, int j) -> const Label& {
    return layered[static_cast<std::size_t>(i) * m + (j - 1)];
  };
  bool reachable = false;
  for (int j = 1; j <= m && !reachable; ++j) {
    for (NodeId d : graph.destinations(j)) {
      reachable = reachable || layered_at(d, j).reached;
    }
  }
  if (!reachable) {
    throw Unreachable("no destination of any stage is reachable from s0");
  }

  AdversaryBestResponse best;
  best.drop = true;
  best.walk = {ifg::kSource};
  best.value = 0.0;

  if (options.objective == PathObjective::kTerminalStage) {
    bool found = false;
    double best_value = 0.0;
    for (int j = 1; j <= m; ++j) {
      for (NodeId d : graph.destinations(j)) {
        const Label& label = layered_at(d, j);
        if (!label.reached) continue;
        const double p = survival(label.walk, w);
        const double value = p * (params.beta_A[j - 1] - alpha) + alpha;
        if (!found || value > best_value) {
          found = true;
          best_value = value;
          best.walk = label.walk;
          best.target_stage = j;
          best.survival = p;
        }
      }
    }
    best.path_value = best_value;
    if (best_value >= 0.0) {
      best.drop = false;
      best.value = best_value;
    } else {
      best.walk = {ifg::kSource};
      best.target_stage = 0;
      best.survival = 1.0;
    }
  } else {
    // value_to_go[j][d]: utility per unit survival after completing stage j
    // at d, counting beta_j and the detection penalty still at stake.
    std::vector<std::vector<double>> value_to_go(
        m + 1, std::vector<double>(graph.num_nodes() + 1, 0.0));
    std::vector<std::vector<Choice>> choice(
        m + 1, std::vector<Choice>(graph.num_nodes() + 1));
    auto continue_from = [&](NodeId start, int stage, Choice& c) {
      double best_here = -alpha;
      const std::vector<Label> labels =
          segment_paths(graph, weight, start, stage);
      for (NodeId d : graph.destinations(stage)) {
        if (d == start || !labels[d].reached) continue;
        const double q = survival(labels[d].walk, w);
        const double v = q * value_to_go[stage][d];
        if (v > best_here) {
          best_here = v;
          c.stop = false;
          c.next = d;
          c.segment.assign(labels[d].walk.begin() + 1, labels[d].walk.end());
        }
      }
      return best_here;
    };
    for (int j = m; j >= 1; --j) {
      for (NodeId d : graph.destinations(j)) {
        Choice& c = choice[j][d];
        if (j == m) {
          value_to_go[j][d] = params.beta_A[j - 1] - alpha;
        } else if (graph.is_destination(d, j + 1)) {
          c.stop = false;
          c.next = d;
          value_to_go[j][d] = params.beta_A[j - 1] + value_to_go[j + 1][d];
        } else {
          value_to_go[j][d] =
              params.beta_A[j - 1] + continue_from(d, j + 1, c);
        }
      }
    }
    Choice root;
    const double root_value = continue_from(ifg::kSource, 1, root);
    best.value = alpha + root_value;
    best.path_value = best.value;
    if (!root.stop) {
      best.drop = false;
      best.walk = {ifg::kSource};
      Choice step = root;
      int stage = 1;
      while (!step.stop) {
        best.walk.insert(best.walk.end(), step.segment.begin(),
                         step.segment.end());
        best.target_stage = stage;
        step = choice[stage][step.next];
        ++stage;
      }
      best.survival = survival(best.walk, w);
    }
  }

  best.path = stage_path(graph, best.walk);
  best.strategy = strategy_from_walk(graph, best.walk);
  best.evaluated_U_A =
      game::evaluate_exact(graph, params, defender, best.strategy).U_A;
  return best;
}

std::vector<GroundElement> ground_set(const InformationFlowGraph& graph,
                                      const std::vector<int>& levels) {
  const int n = graph.num_nodes();
  if (static_cast<int>(levels.size()) != 2 + n) {
    throw ValidationError("need " + std::to_string(2 + n) +
                          " discretization levels, got " +
                          std::to_string(levels.size()));
  }
  for (int z : levels) {
    if (z < 1) throw ValidationError("discretization levels must be >= 1");
  }
  std::vector<GroundElement> out;
  for (NodeId i = 1; i <= n; ++i) {
    std::vector<int> components = {game::kTag, game::kTrap};
    for (int r : graph.rules(i)) components.push_back(game::rule_component(r));
    for (int c : components) {
      for (int z = 1; z <= levels[c]; ++z) out.push_back(GroundElement{i, c, z});
    }
  }
  return out;
}

DefenderStrategy induced_strategy(const InformationFlowGraph& graph,
                                  const std::vector<int>& levels,
                                  const std::vector<GroundElement>& ground,
                                  const std::vector<char>& selected) {
  if (selected.size() != ground.size()) {
    throw ValidationError("selection mask does not match the ground set");
  }
  const int n = graph.num_nodes();
  std::vector<int> count(static_cast<std::size_t>(n + 1) * (2 + n), 0);
  for (std::size_t e = 0; e < ground.size(); ++e) {
    if (!selected[e]) continue;
    ++count[static_cast<std::size_t>(ground[e].node) * (2 + n) +
            ground[e].component];
  }
  DefenderStrategy out(n);
  for (NodeId i = 1; i <= n; ++i) {
    for (int c = 0; c < 2 + n; ++c) {
      const int k = count[static_cast<std::size_t>(i) * (2 + n) + c];
      if (k > 0) out.set(i, c, static_cast<double>(k) / levels[c]);
    }
  }
  return out;
}

DefenderObjective::DefenderObjective(const InformationFlowGraph& graph,
                                     const GameParams& params,
                                     const AdversaryStrategy& adversary,
                                     std::vector<int> levels,
                                     const ObjectiveOptions& options)
    : graph_(graph),
      params_(params),
      adversary_(adversary),
      levels_(std::move(levels)),
      ground_(ground_set(graph, levels_)),
      options_(options) {
  ifg::require_augmented(graph, "DefenderObjective");
  params.require_shape(graph);
  switch (options.evaluator) {
    case EvaluatorChoice::kExact:
      estimator_ = game::Estimator::kExact;
      break;
    case EvaluatorChoice::kMarkov:
      estimator_ = game::Estimator::kMarkov;
      break;
    case EvaluatorChoice::kAuto: {
      const int max_len = options.exact.max_len > 0
                              ? options.exact.max_len
                              : game::default_max_len(graph);
      const std::int64_t paths = game::count_paths(
          graph, adversary, max_len, options.exact_path_limit + 1);
      estimator_ = paths <= options.exact_path_limit ? game::Estimator::kExact
                                                     : game::Estimator::kMarkov;
      break;
    }
  }
}

DefenderStrategy DefenderObjective::strategy(
    const std::vector<char>& selected) const {
  return induced_strategy(graph_, levels_, ground_, selected);
}

double DefenderObjective::operator()(const std::vector<char>& selected) {
  ++evaluations_;
  const DefenderStrategy defender = strategy(selected);
  if (estimator_ == game::Estimator::kExact) {
    return game::evaluate_exact(graph_, params_, defender, adversary_,
                                options_.exact)
        .U_D;
  }
  return game::evaluate_markov(graph_, params_, defender, adversary_,
                               options_.exact)
      .U_D;
}

double marginal_gain(DefenderObjective& f, const std::vector<char>& selected,
                     std::size_t element) {
  if (element >= f.size() || selected.size() != f.size()) {
    throw ValidationError("marginal_gain: element or mask out of range");
  }
  if (selected[element]) {
    throw ValidationError("marginal_gain: element already selected");
  }
  std::vector<char> with = selected;
  with[element] = 1;
  return f(with) - f(selected);
}

DiscretizedDefenderSet defender_best_response_greedy(
    const InformationFlowGraph& graph, const GameParams& params,
    const AdversaryStrategy& adversary, const std::vector<int>& levels,
    const GreedyOptions& options) {
  DefenderObjective f(graph, params, adversary, levels, options.objective);
  const std::size_t n = f.size();
  std::vector<char> lower(n, 0);
  std::vector<char> upper(n, 1);
  double f_lower = f(lower);
  double f_upper = n == 0 ? f_lower : f(upper);
  std::mt19937_64 rng(options.seed);
  for (std::size_t e = 0; e < n; ++e) {
    double f_add;
    double f_remove;
    if (e + 1 == n) {
      // Everything else is decided: lower + e == upper and upper - e == lower.
      f_add = f_upper;
      f_remove = f_lower;
    } else {
      lower[e] = 1;
      f_add = f(lower);
      lower[e] = 0;
      upper[e] = 0;
      f_remove = f(upper);
      upper[e] = 1;
    }
    const double a = f_add - f_lower;
    const double b = f_remove - f_upper;
    bool take;
    if (options.variant == GreedyVariant::kDeterministic) {
      take = a >= b;
    } else {
      const double ap = std::max(a, 0.0);
      const double bp = std::max(b, 0.0);
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      take = ap + bp == 0.0 ? true : u < ap / (ap + bp);
    }
    if (take) {
      lower[e] = 1;
      f_lower = f_add;
    } else {
      upper[e] = 0;
      f_upper = f_remove;
    }
  }

  DiscretizedDefenderSet out;
  out.levels = levels;
  out.ground = f.ground();
  out.selected = lower;
  out.strategy = f.strategy(lower);
  out.value = f_lower;
  out.evaluations = f.evaluations();
  return out;
}

}  // namespace dift::respond
