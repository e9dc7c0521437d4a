// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/graph/graph.hpp"

#include <sstream>

#include "mc/error.hpp"
#include "mc/hash.hpp"

namespace mc::graph {

ComputationGraph::ComputationGraph(NodeLayout layout) : layout_(layout) {
  const int n = layout_.count();
  edge_lookup_.assign(static_cast<std::size_t>(n) * n, -1);
  for (int i = 0; i < n; ++i) nodes_.push_back(layout_.at(i));
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (!layout_.feeds(u, v)) continue;
      edge_lookup_[static_cast<std::size_t>(u) * n + v] = static_cast<int>(edges_.size());
      edges_.push_back({nodes_[u], nodes_[v]});
      endpoints_.emplace_back(u, v);
    }
  }
}

int ComputationGraph::edge_index(int src, int dst) const {
  const int n = node_count();
  if (src < 0 || dst < 0 || src >= n || dst >= n) return -1;
  return edge_lookup_[static_cast<std::size_t>(src) * n + dst];
}

std::optional<int> ComputationGraph::find(const Edge& e) const {
  int src = 0;
  int dst = 0;
  try {
    src = layout_.index(e.src);
    dst = layout_.index(e.dst);
  } catch (const UnknownNode&) {
    return std::nullopt;
  }
  const int idx = edge_index(src, dst);
  if (idx < 0) return std::nullopt;
  return idx;
}

std::string ComputationGraph::config_hash() const {
  return sha256_hex("layers=" + std::to_string(layout_.n_layers) +
                    ";heads=" + std::to_string(layout_.n_heads));
}

nlohmann::json ComputationGraph::to_json() const {
  nlohmann::json j;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes_) nodes.push_back(n.label());
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : edges_) edges.push_back({{"src", e.src.label()}, {"dst", e.dst.label()}});
  return j;
}

std::string ComputationGraph::to_dot() const {
  std::ostringstream out;
  out << "digraph model {\n  rankdir=BT;\n";
  for (const auto& n : nodes_) out << "  \"" << n.label() << "\";\n";
  for (const auto& e : edges_) {
    out << "  \"" << e.src.label() << "\" -> \"" << e.dst.label() << "\";\n";
  }
  out << "}\n";
  return out.str();
}

ComputationGraph build_graph(const model::ModelConfig& config) {
  return ComputationGraph(NodeLayout{config.n_layers, config.n_heads});
}

PatchPlan PatchPlan::all_live(const ComputationGraph& g) {
  return from_mask(g, std::vector<bool>(g.edge_count(), true));
}

PatchPlan PatchPlan::all_corrupted(const ComputationGraph& g) {
  return from_mask(g, std::vector<bool>(g.edge_count(), false));
}

PatchPlan PatchPlan::from_edges(const ComputationGraph& g, std::span<const Edge> circuit) {
  std::vector<bool> mask(g.edge_count(), false);
  for (const auto& e : circuit) {
    const auto idx = g.find(e);
    if (!idx) throw GraphMismatch("edge " + e.label() + " is not in the graph");
    mask[*idx] = true;
  }
  return from_mask(g, std::move(mask));
}

PatchPlan PatchPlan::from_mask(const ComputationGraph& g, std::vector<bool> in_circuit) {
  if (static_cast<int>(in_circuit.size()) != g.edge_count()) {
    throw GraphMismatch("patch plan covers " + std::to_string(in_circuit.size()) +
                        " edges; graph has " + std::to_string(g.edge_count()));
  }
  PatchPlan p;
  p.in_circuit_ = std::move(in_circuit);
  return p;
}

model::EdgePatch PatchPlan::edge_patch(const ComputationGraph& g,
                                       const model::ActivationCache& corrupted) const {
  model::EdgePatch patch;
  patch.corrupted = &corrupted;
  patch.node_count = g.node_count();
  patch.live.assign(static_cast<std::size_t>(g.node_count()) * g.node_count(), 0);
  for (int e = 0; e < g.edge_count(); ++e) {
    if (in_circuit_[e]) {
      patch.live[static_cast<std::size_t>(g.src_index(e)) * g.node_count() + g.dst_index(e)] = 1;
    }
  }
  return patch;
}

model::Prediction patched_forward(const model::TransformerModel& model,
                                  std::span<const int> clean_ids,
                                  const model::ActivationCache& corrupted, const PatchPlan& plan) {
  return patched_forward(model, model::embed(model, clean_ids), corrupted, plan);
}

model::Prediction patched_forward(const model::TransformerModel& model,
                                  const model::EmbeddedInput& clean,
                                  const model::ActivationCache& corrupted, const PatchPlan& plan) {
  const ComputationGraph g(model.layout());
  if (static_cast<int>(plan.mask().size()) != g.edge_count()) {
    throw GraphMismatch("patch plan does not match the model graph");
  }
  if (corrupted.node_count() != g.node_count() - 1) {
    throw MissingCacheEntry("corrupted cache does not cover every graph node");
  }
  const auto patch = plan.edge_patch(g, corrupted);
  return model::forward_patched(model, clean, patch).prediction;
}

}  // namespace mc::graph
