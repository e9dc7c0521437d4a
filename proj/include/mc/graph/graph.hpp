// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_GRAPH_GRAPH_HPP_
#define MC_GRAPH_GRAPH_HPP_

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mc/graph/node_id.hpp"
#include "mc/model/transformer.hpp"

namespace mc::graph {

struct Edge {
  NodeId src;
  NodeId dst;

  std::string label() const { return src.label() + "->" + dst.label(); }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// The transformer as a DAG of components. Nodes are ordered input, then per
// layer its heads and MLP, then logits; edges connect every node to every
// node of a later group and are ordered by (src index, dst index).
class ComputationGraph {
 public:
  explicit ComputationGraph(NodeLayout layout);

  const NodeLayout& layout() const { return layout_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  // Dense node indices of an edge.
  int src_index(int edge) const { return endpoints_[edge].first; }
  int dst_index(int edge) const { return endpoints_[edge].second; }
  // -1 when no such edge exists.
  int edge_index(int src, int dst) const;
  std::optional<int> find(const Edge& e) const;

  // Stable identifier of the architecture the graph was built from.
  std::string config_hash() const;

  nlohmann::json to_json() const;
  std::string to_dot() const;

  friend bool operator==(const ComputationGraph& a, const ComputationGraph& b) {
    return a.layout_.n_layers == b.layout_.n_layers && a.layout_.n_heads == b.layout_.n_heads;
  }

 private:
  NodeLayout layout_;
  std::vector<NodeId> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::pair<int, int>> endpoints_;
  std::vector<int> edge_lookup_;  // node x node -> edge index or -1
};

ComputationGraph build_graph(const model::ModelConfig& config);

// Which edges carry live (clean-run) contributions; every other edge carries
// the corrupted cache's contribution.
class PatchPlan {
 public:
  static PatchPlan all_live(const ComputationGraph& g);
  static PatchPlan all_corrupted(const ComputationGraph& g);
  static PatchPlan from_edges(const ComputationGraph& g, std::span<const Edge> circuit);
  static PatchPlan from_mask(const ComputationGraph& g, std::vector<bool> in_circuit);

  bool in_circuit(int edge) const { return in_circuit_[edge]; }
  const std::vector<bool>& mask() const { return in_circuit_; }
  model::EdgePatch edge_patch(const ComputationGraph& g,
                              const model::ActivationCache& corrupted) const;

 private:
  std::vector<bool> in_circuit_;
};

// Runs `clean` with every out-of-circuit edge fed from `corrupted`.
// Throws LengthMismatch when sequence lengths differ.
model::Prediction patched_forward(const model::TransformerModel& model,
                                  std::span<const int> clean_ids,
                                  const model::ActivationCache& corrupted, const PatchPlan& plan);
model::Prediction patched_forward(const model::TransformerModel& model,
                                  const model::EmbeddedInput& clean,
                                  const model::ActivationCache& corrupted, const PatchPlan& plan);

}  // namespace mc::graph

#endif  // MC_GRAPH_GRAPH_HPP_
