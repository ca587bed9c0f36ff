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

// Information flow graphs: processes and objects joined by observed flows,
// with the attack destinations of each stage and the vulnerable entry set.
//
// Real nodes have ids 1..N. Id 0 is the pseudo-source s0, which exists only
// after augment_with_source() and has one edge to every entry node.

#ifndef DIFT_IFG_HPP_
#define DIFT_IFG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dift::ifg {

using NodeId = std::int32_t;
inline constexpr NodeId kSource = 0;

struct Node {
  NodeId id = 0;
  std::string label;
  double traffic_weight = 0.0;
  // Rule indices in 1..N whose check is meaningful at this node.
  std::vector<int> rules;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId from = 0;
  NodeId to = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Raw graph contents as read from a file or produced by a generator. Nothing
// here is checked; validate() reports what is wrong with it.
struct GraphData {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<NodeId>> stages;  // stages[j-1] is D_j
  std::vector<NodeId> vulnerable;           // the entry set lambda
  bool normalized = false;                  // traffic weights must sum to 1

  friend bool operator==(const GraphData&, const GraphData&) = default;
};

enum class ViolationKind {
  kDuplicateNodeId,
  kNodeIdOutOfRange,
  kDanglingEdge,
  kDuplicateEdge,
  kNoEdgeIntoSource,
  kEdgeFromSource,
  kNoStages,
  kEmptyStage,
  kUnknownDestination,
  kEmptyVulnerable,
  kUnknownVulnerable,
  kNegativeWeight,
  kWeightsNotNormalized,
  kRuleOutOfRange,
};

const char* violation_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  NodeId node = -1;  // offending node, when there is one
  int stage = 0;     // offending stage (1-based), when there is one
  std::string message;
};

// Returns every invariant violation of `data`; an empty list means valid.
std::vector<Violation> validate(const GraphData& data);

// Node ids that the helpers below return are always sorted ascending.
class InformationFlowGraph {
 public:
  // Throws ValidationError listing every violation if `data` is invalid.
  explicit InformationFlowGraph(GraphData data);

  const GraphData& data() const { return data_; }

  int num_nodes() const { return static_cast<int>(data_.nodes.size()); }
  int num_stages() const { return static_cast<int>(data_.stages.size()); }
  bool augmented() const { return augmented_; }

  const Node& node(NodeId id) const { return data_.nodes[id - 1]; }
  double traffic_weight(NodeId id) const {
    return id == kSource ? 0.0 : data_.nodes[id - 1].traffic_weight;
  }
  const std::vector<int>& rules(NodeId id) const {
    return data_.nodes[id - 1].rules;
  }

  // Out-neighbours of `id`. For s0 this is the entry set once augmented and
  // empty before.
  const std::vector<NodeId>& successors(NodeId id) const { return succ_[id]; }
  const std::vector<NodeId>& predecessors(NodeId id) const {
    return pred_[id];
  }

  // D_j for 1-based j.
  const std::vector<NodeId>& destinations(int stage) const {
    return data_.stages[stage - 1];
  }
  bool is_destination(NodeId id, int stage) const {
    return dest_mask_[stage - 1][id] != 0;
  }
  bool is_entry(NodeId id) const { return id != kSource && entry_mask_[id]; }
  const std::vector<NodeId>& entries() const { return data_.vulnerable; }

  // Total number of (node, rule) relevance pairs.
  int relevance_pairs() const;

  // Row-major (N+1) x (2+N) table of 0.0/1.0: which strategy components take
  // part in the detection product at each node. Row 0 (s0) is all zero.
  const std::vector<double>& detection_mask() const { return detection_mask_; }

  friend bool operator==(const InformationFlowGraph& a,
                         const InformationFlowGraph& b) {
    return a.augmented_ == b.augmented_ && a.data_ == b.data_;
  }

 private:
  friend InformationFlowGraph augment_with_source(const InformationFlowGraph&);
  void index();

  GraphData data_;
  bool augmented_ = false;
  std::vector<std::vector<NodeId>> succ_;
  std::vector<std::vector<NodeId>> pred_;
  std::vector<std::vector<char>> dest_mask_;
  std::vector<char> entry_mask_;
  std::vector<double> detection_mask_;
};

// Adds s0 and the edges (s0, v) for every entry v. Throws ValidationError if
// the graph is already augmented.
InformationFlowGraph augment_with_source(const InformationFlowGraph& graph);

// Throws ValidationError unless `graph` carries s0.
void require_augmented(const InformationFlowGraph& graph, const char* caller);

// Nodes 1..n with uniform traffic weights 1/n and relevance {1..n}, flagged
// as normalized.
GraphData make_data(int n, std::vector<Edge> edges,
                    std::vector<std::vector<NodeId>> stages,
                    std::vector<NodeId> vulnerable);

// JSON documents with "format": "dift-ifg/1". See docs/file_formats.md.
InformationFlowGraph load(const std::filesystem::path& path);
InformationFlowGraph parse(const std::string& text);
void save(const InformationFlowGraph& graph, const std::filesystem::path& path);
std::string serialize(const InformationFlowGraph& graph);

std::string export_dot(const InformationFlowGraph& graph);

}  // namespace dift::ifg

#endif  // DIFT_IFG_HPP_
