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

// Parameters, strategy containers and their file formats.

#include <algorithm>
#include <cmath>
#include <string>

#include "dift/error.hpp"
#include "dift/game.hpp"
#include "dift/kernels.hpp"
#include "json.hpp"

namespace dift::game {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kSumTolerance = 1e-9;

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& line : lines) out += "\n  " + line;
  return out;
}

}  // namespace

std::vector<std::string> GameParams::shape_violations(
    const InformationFlowGraph& graph) const {
  std::vector<std::string> out;
  const auto m = static_cast<std::size_t>(graph.num_stages());
  const auto n = static_cast<std::size_t>(graph.num_nodes());
  if (beta_A.size() != m) {
    out.push_back("beta_A has " + std::to_string(beta_A.size()) +
                  " entries, the graph has " + std::to_string(m) + " stages");
  }
  if (beta_D.size() != m) {
    out.push_back("beta_D has " + std::to_string(beta_D.size()) +
                  " entries, the graph has " + std::to_string(m) + " stages");
  }
  if (gamma.size() != n) {
    out.push_back("gamma has " + std::to_string(gamma.size()) +
                  " entries, the graph has " + std::to_string(n) + " rules");
  }
  return out;
}

std::vector<std::string> GameParams::violations(
    const InformationFlowGraph& graph) const {
  std::vector<std::string> out = shape_violations(graph);
  if (!(alpha_A < 0.0)) out.push_back("alpha_A must be < 0");
  if (!(alpha_D > 0.0)) out.push_back("alpha_D must be > 0");
  for (std::size_t j = 0; j < beta_A.size(); ++j) {
    if (!(beta_A[j] > 0.0)) {
      out.push_back("beta_A[" + std::to_string(j + 1) + "] must be > 0");
    }
  }
  for (std::size_t j = 0; j < beta_D.size(); ++j) {
    if (!(beta_D[j] < 0.0)) {
      out.push_back("beta_D[" + std::to_string(j + 1) + "] must be < 0");
    }
  }
  if (!(c1 < 0.0)) out.push_back("c1 must be < 0");
  if (!(c2 < 0.0)) out.push_back("c2 must be < 0");
  for (std::size_t r = 0; r < gamma.size(); ++r) {
    if (!(gamma[r] <= 0.0)) {
      out.push_back("gamma[" + std::to_string(r + 1) + "] must be <= 0");
    }
  }
  return out;
}

void GameParams::require_shape(const InformationFlowGraph& graph) const {
  const auto problems = shape_violations(graph);
  if (!problems.empty()) {
    throw ParamError("game parameters do not fit the graph:" + join(problems));
  }
}

void GameParams::require_valid(const InformationFlowGraph& graph) const {
  const auto problems = violations(graph);
  if (!problems.empty()) {
    throw ParamError("invalid game parameters:" + join(problems));
  }
}

GameParams GameParams::scaled_costs(double factor) const {
  GameParams out = *this;
  out.c1 *= factor;
  out.c2 *= factor;
  for (double& g : out.gamma) g *= factor;
  return out;
}

GameParams default_params(int num_rules, int num_stages) {
  static constexpr double kStageReward[] = {100.0, 200.0, 500.0, 1200.0};
  GameParams p;
  p.alpha_A = -2000.0;
  p.alpha_D = 2000.0;
  for (int j = 0; j < num_stages; ++j) {
    const double r = kStageReward[std::min(j, 3)];
    p.beta_A.push_back(r);
    p.beta_D.push_back(-r);
  }
  p.c1 = -50.0;
  p.c2 = -50.0;
  p.gamma.assign(num_rules, -50.0);
  return p;
}

double tag_cost(const GameParams& params, const InformationFlowGraph& graph,
                NodeId i) {
  return params.c1 * graph.traffic_weight(i);
}

double trap_cost(const GameParams& params, const InformationFlowGraph& graph,
                 NodeId i) {
  return params.c2 * graph.traffic_weight(i);
}

DefenderStrategy::DefenderStrategy(int num_nodes)
    : n_(num_nodes),
      p_(static_cast<std::size_t>(num_nodes + 1) * (2 + num_nodes), 0.0) {}

DefenderStrategy DefenderStrategy::constant(int num_nodes, double p) {
  DefenderStrategy out(num_nodes);
  for (NodeId i = 1; i <= num_nodes; ++i) {
    for (int c = 0; c < out.num_components(); ++c) out.set(i, c, p);
  }
  return out;
}

void DefenderStrategy::set(NodeId i, int component, double p) {
  if (i < 1 || i > n_) {
    throw ValidationError("defender strategy has no row for node " +
                          std::to_string(i));
  }
  if (component < 0 || component >= num_components()) {
    throw ValidationError("defender strategy has no component " +
                          std::to_string(component));
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("defender probability " + std::to_string(p) +
                          " outside [0, 1]");
  }
  p_[index(i, component)] = p;
}

double detection_prob(NodeId i, const DefenderStrategy& defender,
                      const std::vector<int>& relevance) {
  if (i == ifg::kSource) return 0.0;
  double p = defender.get(i, kTag) * defender.get(i, kTrap);
  for (int r : relevance) p *= defender.get(i, rule_component(r));
  return p;
}

std::vector<double> detection_probs(const InformationFlowGraph& graph,
                                    const DefenderStrategy& defender) {
  if (defender.num_nodes() != graph.num_nodes()) {
    throw ValidationError("defender strategy covers " +
                          std::to_string(defender.num_nodes()) +
                          " nodes, the graph has " +
                          std::to_string(graph.num_nodes()));
  }
  const auto rows = static_cast<std::size_t>(graph.num_nodes()) + 1;
  std::vector<double> out(rows);
  simd::masked_row_products(defender.values().data(),
                            graph.detection_mask().data(), rows,
                            static_cast<std::size_t>(defender.num_components()),
                            out.data());
  out[ifg::kSource] = 0.0;
  return out;
}

Arrival arrive(const InformationFlowGraph& graph, NodeId node, int stage) {
  Arrival a;
  a.stage = stage;
  a.first_crossed = stage;
  const int m = graph.num_stages();
  while (graph.is_destination(node, a.stage)) {
    if (a.stage == m) {
      a.complete = true;
      a.last_crossed = m;
      return a;
    }
    ++a.stage;
  }
  a.last_crossed = a.stage - 1;
  return a;
}

AdversaryStrategy::AdversaryStrategy(const InformationFlowGraph& graph)
    : n_(graph.num_nodes()), m_(graph.num_stages()) {
  ifg::require_augmented(graph, "AdversaryStrategy");
  moves_.resize(n_ + 1);
  forced_.assign(static_cast<std::size_t>(n_ + 1) * m_, 0);
  offset_.assign(static_cast<std::size_t>(n_ + 1) * m_ + 1, 0);
  for (NodeId i = 0; i <= n_; ++i) moves_[i] = graph.successors(i);
  std::size_t total = 0;
  for (NodeId i = 0; i <= n_; ++i) {
    for (int j = 1; j <= m_; ++j) {
      const std::size_t s = state(i, j);
      forced_[s] = (i != ifg::kSource && graph.is_destination(i, j)) ? 1 : 0;
      offset_[s] = total;
      total += moves_[i].size() + 1;
    }
  }
  offset_.back() = total;
  probs_.assign(total, 0.0);
  for (std::size_t s = 0; s + 1 < offset_.size(); ++s) {
    probs_[offset_[s + 1] - 1] = 1.0;
  }
}

AdversaryStrategy AdversaryStrategy::uniform(
    const InformationFlowGraph& graph) {
  AdversaryStrategy out(graph);
  for (NodeId i = 0; i <= out.n_; ++i) {
    for (int j = 1; j <= out.m_; ++j) {
      if (out.forced(i, j)) continue;
      const std::size_t k = out.moves_[i].size() + 1;
      std::vector<double> p(k, 1.0 / static_cast<double>(k));
      out.set_distribution(i, j, p);
    }
  }
  return out;
}

std::span<const double> AdversaryStrategy::distribution(NodeId i,
                                                        int stage) const {
  const std::size_t s = state(i, stage);
  return {probs_.data() + offset_[s], offset_[s + 1] - offset_[s]};
}

void AdversaryStrategy::set_distribution(NodeId i, int stage,
                                         std::span<const double> p) {
  if (i < 0 || i > n_ || stage < 1 || stage > m_) {
    throw ValidationError("adversary state (" + std::to_string(i) + ", " +
                          std::to_string(stage) + ") does not exist");
  }
  if (forced(i, stage)) {
    throw ValidationError("adversary state (" + std::to_string(i) + ", " +
                          std::to_string(stage) +
                          ") is a forced stage transition");
  }
  const std::size_t s = state(i, stage);
  const std::size_t k = offset_[s + 1] - offset_[s];
  if (p.size() != k) {
    throw ValidationError("adversary state (" + std::to_string(i) + ", " +
                          std::to_string(stage) + ") has " +
                          std::to_string(k) + " actions, got " +
                          std::to_string(p.size()) + " probabilities");
  }
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) {
      throw ValidationError("negative adversary probability at node " +
                            std::to_string(i));
    }
    sum += x;
  }
  if (std::fabs(sum - 1.0) > kSumTolerance) {
    throw ValidationError("adversary distribution at (" + std::to_string(i) +
                          ", " + std::to_string(stage) + ") sums to " +
                          std::to_string(sum));
  }
  std::copy(p.begin(), p.end(), probs_.begin() + offset_[s]);
}

void AdversaryStrategy::set_move(NodeId i, int stage, NodeId target) {
  const auto& m = moves_.at(i);
  auto it = std::lower_bound(m.begin(), m.end(), target);
  if (it == m.end() || *it != target) {
    throw ValidationError("no edge (" + std::to_string(i) + ", " +
                          std::to_string(target) + ")");
  }
  std::vector<double> p(m.size() + 1, 0.0);
  p[it - m.begin()] = 1.0;
  set_distribution(i, stage, p);
}

void AdversaryStrategy::set_drop(NodeId i, int stage) {
  std::vector<double> p(moves_.at(i).size() + 1, 0.0);
  p.back() = 1.0;
  set_distribution(i, stage, p);
}

double AdversaryStrategy::drop_prob(NodeId i, int stage) const {
  if (forced(i, stage)) return 0.0;
  return distribution(i, stage).back();
}

double AdversaryStrategy::move_prob(NodeId i, int stage, NodeId target) const {
  if (forced(i, stage)) return 0.0;
  const auto& m = moves_[i];
  auto it = std::lower_bound(m.begin(), m.end(), target);
  if (it == m.end() || *it != target) return 0.0;
  return distribution(i, stage)[it - m.begin()];
}

int default_max_len(const InformationFlowGraph& graph) {
  return 4 * graph.num_nodes() * graph.num_stages();
}

void assign_costs(const InformationFlowGraph& graph, const GameParams& params,
                  const DefenderStrategy& defender, UtilityReport& report) {
  report.cost_tag = 0.0;
  report.cost_trap = 0.0;
  report.cost_rules = 0.0;
  for (NodeId i = 1; i <= graph.num_nodes(); ++i) {
    report.cost_tag += defender.get(i, kTag) * tag_cost(params, graph, i);
    report.cost_trap += defender.get(i, kTrap) * trap_cost(params, graph, i);
    for (int r = 1; r <= graph.num_nodes(); ++r) {
      report.cost_rules +=
          defender.get(i, rule_component(r)) * params.gamma[r - 1];
    }
  }
}

std::string serialize_defender(const DefenderStrategy& defender) {
  Json doc;
  doc["format"] = "dift-defender/1";
  doc["nodes"] = defender.num_nodes();
  Json rows = Json::array();
  for (NodeId i = 1; i <= defender.num_nodes(); ++i) {
    const double* row = defender.row(i);
    Json p(std::vector<double>(row, row + defender.num_components()));
    rows.push_back(Json{{"node", i}, {"p", std::move(p)}});
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

DefenderStrategy parse_defender(const std::string& text, int num_nodes) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("document", e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "dift-defender/1") {
    throw ParseError("format", "expected \"dift-defender/1\"");
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_number_integer() ||
      doc["nodes"].get<int>() != num_nodes) {
    throw ParseError("nodes", "expected " + std::to_string(num_nodes));
  }
  DefenderStrategy out(num_nodes);
  if (!doc.contains("rows") || !doc["rows"].is_array()) {
    throw ParseError("rows", "expected an array");
  }
  for (std::size_t k = 0; k < doc["rows"].size(); ++k) {
    const std::string field = "rows[" + std::to_string(k) + "]";
    const Json& row = doc["rows"][k];
    if (!row.is_object() || !row.contains("node") ||
        !row["node"].is_number_integer()) {
      throw ParseError(field + ".node", "expected an integer node id");
    }
    const NodeId i = row["node"].get<NodeId>();
    if (i < 1 || i > num_nodes) {
      throw ParseError(field + ".node", "unknown node " + std::to_string(i));
    }
    if (!row.contains("p") || !row["p"].is_array() ||
        static_cast<int>(row["p"].size()) != out.num_components()) {
      throw ParseError(field + ".p", "expected " +
                                         std::to_string(out.num_components()) +
                                         " probabilities");
    }
    for (int c = 0; c < out.num_components(); ++c) {
      const Json& v = row["p"][c];
      if (!v.is_number()) {
        throw ParseError(field + ".p[" + std::to_string(c) + "]",
                         "expected a number");
      }
      out.set(i, c, v.get<double>());
    }
  }
  return out;
}

std::string serialize_adversary(const AdversaryStrategy& adversary) {
  Json doc;
  doc["format"] = "dift-adversary/1";
  Json states = Json::array();
  for (NodeId i = 0; i <= adversary.num_nodes(); ++i) {
    for (int j = 1; j <= adversary.num_stages(); ++j) {
      if (adversary.forced(i, j) || adversary.drop_prob(i, j) == 1.0) continue;
      const auto dist = adversary.distribution(i, j);
      Json moves = Json::object();
      for (std::size_t a = 0; a < adversary.moves(i).size(); ++a) {
        if (dist[a] > 0.0) moves[std::to_string(adversary.moves(i)[a])] = dist[a];
      }
      states.push_back(Json{{"node", i},
                            {"stage", j},
                            {"moves", std::move(moves)},
                            {"drop", dist.back()}});
    }
  }
  doc["states"] = std::move(states);
  return doc.dump(2) + "\n";
}

AdversaryStrategy parse_adversary(const std::string& text,
                                  const InformationFlowGraph& graph) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("document", e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "dift-adversary/1") {
    throw ParseError("format", "expected \"dift-adversary/1\"");
  }
  if (!doc.contains("states") || !doc["states"].is_array()) {
    throw ParseError("states", "expected an array");
  }
  AdversaryStrategy out(graph);
  for (std::size_t k = 0; k < doc["states"].size(); ++k) {
    const std::string field = "states[" + std::to_string(k) + "]";
    const Json& s = doc["states"][k];
    if (!s.is_object()) throw ParseError(field, "expected an object");
    if (!s.contains("node") || !s["node"].is_number_integer()) {
      throw ParseError(field + ".node", "expected an integer node id");
    }
    if (!s.contains("stage") || !s["stage"].is_number_integer()) {
      throw ParseError(field + ".stage", "expected an integer stage");
    }
    const NodeId i = s["node"].get<NodeId>();
    const int j = s["stage"].get<int>();
    if (i < 0 || i > graph.num_nodes()) {
      throw ParseError(field + ".node", "unknown node " + std::to_string(i));
    }
    if (j < 1 || j > graph.num_stages()) {
      throw ParseError(field + ".stage", "unknown stage " + std::to_string(j));
    }
    const auto& moves = out.moves(i);
    std::vector<double> p(moves.size() + 1, 0.0);
    if (s.contains("moves")) {
      if (!s["moves"].is_object()) {
        throw ParseError(field + ".moves", "expected an object");
      }
      for (const auto& [key, value] : s["moves"].items()) {
        NodeId target = -1;
        try {
          target = std::stoi(key);
        } catch (const std::exception&) {
          throw ParseError(field + ".moves", "bad node id '" + key + "'");
        }
        auto it = std::lower_bound(moves.begin(), moves.end(), target);
        if (it == moves.end() || *it != target) {
          throw ParseError(field + ".moves",
                           "no edge to node " + std::to_string(target));
        }
        if (!value.is_number()) {
          throw ParseError(field + ".moves." + key, "expected a number");
        }
        p[it - moves.begin()] = value.get<double>();
      }
    }
    if (!s.contains("drop") || !s["drop"].is_number()) {
      throw ParseError(field + ".drop", "expected a number");
    }
    p.back() = s["drop"].get<double>();
    try {
      out.set_distribution(i, j, p);
    } catch (const ValidationError& e) {
      throw ParseError(field, e.what());
    }
  }
  return out;
}

}  // namespace dift::game
