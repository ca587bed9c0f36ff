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

#include "dift/ifg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dift/error.hpp"
#include "json.hpp"

namespace dift::ifg {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormat = "dift-ifg/1";
constexpr double kNormalizationTolerance = 1e-9;

void sort_unique(std::vector<NodeId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

const char* violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kDuplicateNodeId:
      return "DuplicateNodeId";
    case ViolationKind::kNodeIdOutOfRange:
      return "NodeIdOutOfRange";
    case ViolationKind::kDanglingEdge:
      return "DanglingEdge";
    case ViolationKind::kDuplicateEdge:
      return "DuplicateEdge";
    case ViolationKind::kNoEdgeIntoSource:
      return "NoEdgeIntoSource";
    case ViolationKind::kEdgeFromSource:
      return "EdgeFromSource";
    case ViolationKind::kNoStages:
      return "NoStages";
    case ViolationKind::kEmptyStage:
      return "EmptyStage";
    case ViolationKind::kUnknownDestination:
      return "UnknownDestination";
    case ViolationKind::kEmptyVulnerable:
      return "EmptyVulnerable";
    case ViolationKind::kUnknownVulnerable:
      return "UnknownVulnerable";
    case ViolationKind::kNegativeWeight:
      return "NegativeWeight";
    case ViolationKind::kWeightsNotNormalized:
      return "WeightsNotNormalized";
    case ViolationKind::kRuleOutOfRange:
      return "RuleOutOfRange";
  }
  return "Unknown";
}

std::vector<Violation> validate(const GraphData& data) {
  std::vector<Violation> out;
  auto add = [&out](ViolationKind kind, NodeId node, int stage,
                    std::string message) {
    out.push_back(Violation{kind, node, stage, std::move(message)});
  };
  const auto n = static_cast<NodeId>(data.nodes.size());
  auto known = [n](NodeId id) { return id >= 1 && id <= n; };

  std::vector<char> seen(n + 1, 0);
  double weight_sum = 0.0;
  for (const Node& node : data.nodes) {
    if (!known(node.id)) {
      add(ViolationKind::kNodeIdOutOfRange, node.id, 0,
          "node id " + std::to_string(node.id) + " is outside 1.." +
              std::to_string(n));
    } else if (seen[node.id]) {
      add(ViolationKind::kDuplicateNodeId, node.id, 0,
          "node id " + std::to_string(node.id) + " appears twice");
    } else {
      seen[node.id] = 1;
    }
    if (!(node.traffic_weight >= 0.0)) {
      add(ViolationKind::kNegativeWeight, node.id, 0,
          "node " + std::to_string(node.id) + " has a negative traffic weight");
    }
    weight_sum += node.traffic_weight;
    for (int r : node.rules) {
      if (r < 1 || r > n) {
        add(ViolationKind::kRuleOutOfRange, node.id, 0,
            "node " + std::to_string(node.id) + " lists rule " +
                std::to_string(r) + " outside 1.." + std::to_string(n));
      }
    }
  }
  if (data.normalized &&
      std::fabs(weight_sum - 1.0) > kNormalizationTolerance) {
    add(ViolationKind::kWeightsNotNormalized, -1, 0,
        "traffic weights sum to " + std::to_string(weight_sum) +
            " but the graph is flagged as normalized");
  }

  std::vector<Edge> sorted = data.edges;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const Edge& e = sorted[k];
    const std::string name =
        "(" + std::to_string(e.from) + ", " + std::to_string(e.to) + ")";
    if (e.to == kSource) {
      add(ViolationKind::kNoEdgeIntoSource, e.from, 0,
          "edge " + name + " enters the pseudo-source");
    } else if (e.from == kSource) {
      add(ViolationKind::kEdgeFromSource, e.to, 0,
          "edge " + name + " leaves the pseudo-source; entry edges come "
          "from the vulnerable set");
    } else if (!known(e.from) || !known(e.to)) {
      add(ViolationKind::kDanglingEdge, known(e.from) ? e.to : e.from, 0,
          "edge " + name + " has an unknown endpoint");
    }
    if (k > 0 && sorted[k - 1] == e) {
      add(ViolationKind::kDuplicateEdge, e.from, 0,
          "edge " + name + " appears twice");
    }
  }

  if (data.stages.empty()) {
    add(ViolationKind::kNoStages, -1, 0, "no destination stages");
  }
  for (std::size_t j = 0; j < data.stages.size(); ++j) {
    const int stage = static_cast<int>(j) + 1;
    if (data.stages[j].empty()) {
      add(ViolationKind::kEmptyStage, -1, stage,
          "destination set of stage " + std::to_string(stage) + " is empty");
    }
    for (NodeId d : data.stages[j]) {
      if (!known(d)) {
        add(ViolationKind::kUnknownDestination, d, stage,
            "stage " + std::to_string(stage) + " lists unknown node " +
                std::to_string(d));
      }
    }
  }

  if (data.vulnerable.empty()) {
    add(ViolationKind::kEmptyVulnerable, -1, 0, "vulnerable set is empty");
  }
  for (NodeId v : data.vulnerable) {
    if (!known(v)) {
      add(ViolationKind::kUnknownVulnerable, v, 0,
          "vulnerable set lists unknown node " + std::to_string(v));
    }
  }
  return out;
}

GraphData make_data(int n, std::vector<Edge> edges,
                    std::vector<std::vector<NodeId>> stages,
                    std::vector<NodeId> vulnerable) {
  GraphData data;
  std::vector<int> all_rules(n);
  for (int r = 0; r < n; ++r) all_rules[r] = r + 1;
  for (NodeId i = 1; i <= n; ++i) {
    data.nodes.push_back(Node{i, std::to_string(i), 1.0 / n, all_rules});
  }
  data.edges = std::move(edges);
  data.stages = std::move(stages);
  data.vulnerable = std::move(vulnerable);
  data.normalized = true;
  return data;
}

InformationFlowGraph::InformationFlowGraph(GraphData data)
    : data_(std::move(data)) {
  const std::vector<Violation> violations = validate(data_);
  if (!violations.empty()) {
    std::string message = "invalid information flow graph:";
    for (const Violation& v : violations) {
      message += "\n  ";
      message += violation_name(v.kind);
      message += ": " + v.message;
    }
    throw ValidationError(message);
  }
  std::sort(data_.nodes.begin(), data_.nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  for (Node& node : data_.nodes) sort_unique(node.rules);
  std::sort(data_.edges.begin(), data_.edges.end());
  for (auto& stage : data_.stages) sort_unique(stage);
  sort_unique(data_.vulnerable);
  index();
}

void InformationFlowGraph::index() {
  const int n = num_nodes();
  succ_.assign(n + 1, {});
  pred_.assign(n + 1, {});
  for (const Edge& e : data_.edges) {
    succ_[e.from].push_back(e.to);
    pred_[e.to].push_back(e.from);
  }
  if (augmented_) {
    for (NodeId v : data_.vulnerable) {
      succ_[kSource].push_back(v);
      pred_[v].push_back(kSource);
    }
  }
  for (auto& list : succ_) std::sort(list.begin(), list.end());
  for (auto& list : pred_) std::sort(list.begin(), list.end());

  dest_mask_.assign(num_stages(), std::vector<char>(n + 1, 0));
  for (int j = 0; j < num_stages(); ++j) {
    for (NodeId d : data_.stages[j]) dest_mask_[j][d] = 1;
  }
  entry_mask_.assign(n + 1, 0);
  for (NodeId v : data_.vulnerable) entry_mask_[v] = 1;

  const int cols = 2 + n;
  detection_mask_.assign(static_cast<std::size_t>(n + 1) * cols, 0.0);
  for (NodeId i = 1; i <= n; ++i) {
    double* row = &detection_mask_[static_cast<std::size_t>(i) * cols];
    row[0] = 1.0;
    row[1] = 1.0;
    for (int r : rules(i)) row[1 + r] = 1.0;
  }
}

int InformationFlowGraph::relevance_pairs() const {
  int total = 0;
  for (const Node& node : data_.nodes) {
    total += static_cast<int>(node.rules.size());
  }
  return total;
}

InformationFlowGraph augment_with_source(const InformationFlowGraph& graph) {
  if (graph.augmented()) {
    throw ValidationError("graph already contains the pseudo-source s0");
  }
  InformationFlowGraph out = graph;
  out.augmented_ = true;
  out.index();
  return out;
}

void require_augmented(const InformationFlowGraph& graph, const char* caller) {
  if (!graph.augmented()) {
    throw ValidationError(std::string(caller) +
                          " needs a graph augmented with the pseudo-source");
  }
}

namespace {

template <typename T>
T read_as(const Json& value, const std::string& field, const char* expected) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(field, std::string("expected ") + expected + ", got " +
                                value.type_name());
  }
}

NodeId read_id(const Json& value, const std::string& field) {
  if (!value.is_number_integer()) {
    throw ParseError(field, std::string("expected an integer node id, got ") +
                                value.type_name());
  }
  return read_as<NodeId>(value, field, "an integer node id");
}

const Json& require(const Json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(key, "missing required field");
  return *it;
}

std::vector<NodeId> read_id_list(const Json& value, const std::string& field) {
  if (!value.is_array()) {
    throw ParseError(field, std::string("expected an array of node ids, got ") +
                                value.type_name());
  }
  std::vector<NodeId> out;
  for (std::size_t k = 0; k < value.size(); ++k) {
    out.push_back(read_id(value[k], field + "[" + std::to_string(k) + "]"));
  }
  return out;
}

}  // namespace

InformationFlowGraph parse(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("document", e.what());
  }
  if (!doc.is_object()) throw ParseError("document", "expected an object");
  const Json& format = require(doc, "format");
  if (!format.is_string() || format.get<std::string>() != kFormat) {
    throw ParseError("format", std::string("expected \"") + kFormat + "\"");
  }

  GraphData data;
  const Json& nodes = require(doc, "nodes");
  if (!nodes.is_array()) throw ParseError("nodes", "expected an array");
  const auto n = static_cast<int>(nodes.size());
  std::vector<int> all_rules(n);
  for (int r = 0; r < n; ++r) all_rules[r] = r + 1;
  for (int k = 0; k < n; ++k) {
    const std::string field = "nodes[" + std::to_string(k) + "]";
    const Json& entry = nodes[k];
    if (!entry.is_object()) throw ParseError(field, "expected an object");
    Node node;
    node.id = read_id(require(entry, "id"), field + ".id");
    node.label = std::to_string(node.id);
    if (auto it = entry.find("label"); it != entry.end()) {
      node.label = read_as<std::string>(*it, field + ".label", "a string");
    }
    node.traffic_weight = 1.0 / n;
    if (auto it = entry.find("traffic_weight"); it != entry.end()) {
      if (!it->is_number()) {
        throw ParseError(field + ".traffic_weight", "expected a number");
      }
      node.traffic_weight = it->get<double>();
    }
    node.rules = all_rules;
    if (auto it = entry.find("rules"); it != entry.end()) {
      const std::vector<NodeId> ids = read_id_list(*it, field + ".rules");
      node.rules.assign(ids.begin(), ids.end());
    }
    data.nodes.push_back(std::move(node));
  }

  const Json& edges = require(doc, "edges");
  if (!edges.is_array()) throw ParseError("edges", "expected an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string field = "edges[" + std::to_string(k) + "]";
    const std::vector<NodeId> pair = read_id_list(edges[k], field);
    if (pair.size() != 2) throw ParseError(field, "expected [from, to]");
    data.edges.push_back(Edge{pair[0], pair[1]});
  }

  const Json& stages = require(doc, "stages");
  if (!stages.is_array()) {
    throw ParseError("stages", "expected an array of destination sets");
  }
  for (std::size_t j = 0; j < stages.size(); ++j) {
    data.stages.push_back(
        read_id_list(stages[j], "stages[" + std::to_string(j) + "]"));
  }
  data.vulnerable = read_id_list(require(doc, "vulnerable"), "vulnerable");

  if (auto it = doc.find("normalized"); it != doc.end()) {
    data.normalized = read_as<bool>(*it, "normalized", "a boolean");
  }
  bool augmented = false;
  if (auto it = doc.find("augmented"); it != doc.end()) {
    augmented = read_as<bool>(*it, "augmented", "a boolean");
  }
  InformationFlowGraph graph(std::move(data));
  return augmented ? augment_with_source(graph) : graph;
}

InformationFlowGraph load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string serialize(const InformationFlowGraph& graph) {
  const GraphData& data = graph.data();
  Json doc;
  doc["format"] = kFormat;
  Json nodes = Json::array();
  for (const Node& node : data.nodes) {
    Json entry;
    entry["id"] = node.id;
    entry["label"] = node.label;
    entry["traffic_weight"] = node.traffic_weight;
    entry["rules"] = node.rules;
    nodes.push_back(std::move(entry));
  }
  doc["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const Edge& e : data.edges) edges.push_back({e.from, e.to});
  doc["edges"] = std::move(edges);
  doc["stages"] = data.stages;
  doc["vulnerable"] = data.vulnerable;
  doc["normalized"] = data.normalized;
  doc["augmented"] = graph.augmented();
  return doc.dump(2) + "\n";
}

void save(const InformationFlowGraph& graph,
          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write graph file " + path.string());
  out << serialize(graph);
  if (!out) throw IoError("failed writing graph file " + path.string());
}

namespace {

std::string escape_label(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const InformationFlowGraph& graph) {
  std::ostringstream dot;
  dot << "digraph ifg {\n";
  if (graph.augmented()) dot << "  n0 [label=\"s0\", shape=point];\n";
  for (NodeId i = 1; i <= graph.num_nodes(); ++i) {
    std::string stages;
    for (int j = 1; j <= graph.num_stages(); ++j) {
      if (!graph.is_destination(i, j)) continue;
      stages += stages.empty() ? "D" : ",D";
      stages += std::to_string(j);
    }
    dot << "  n" << i << " [label=\"" << escape_label(graph.node(i).label);
    if (!stages.empty()) dot << "\\n" << stages;
    dot << "\"";
    if (graph.is_entry(i)) dot << ", shape=invhouse";
    if (!stages.empty()) dot << ", peripheries=2";
    dot << "];\n";
  }
  for (NodeId i = 0; i <= graph.num_nodes(); ++i) {
    for (NodeId k : graph.successors(i)) {
      dot << "  n" << i << " -> n" << k << ";\n";
    }
  }
  dot << "}\n";
  return dot.str();
}

}  // namespace dift::ifg
