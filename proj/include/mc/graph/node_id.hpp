// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_GRAPH_NODE_ID_HPP_
#define MC_GRAPH_NODE_ID_HPP_

#include <compare>
#include <string>
#include <string_view>

namespace mc::graph {

enum class NodeKind { Input, Head, Mlp, Logits };

// A component of the transformer viewed as a graph. Labels follow the
// "input", "a{layer}.h{head}", "m{layer}", "logits" convention.
struct NodeId {
  NodeKind kind = NodeKind::Input;
  int layer = -1;
  int head = -1;

  static NodeId input() { return {NodeKind::Input, -1, -1}; }
  static NodeId attention(int layer, int head) { return {NodeKind::Head, layer, head}; }
  static NodeId mlp(int layer) { return {NodeKind::Mlp, layer, -1}; }
  static NodeId logits() { return {NodeKind::Logits, -1, -1}; }

  std::string label() const;
  // Throws UnknownNode for anything that is not a well-formed label.
  static NodeId parse(std::string_view label);

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

// Dense node numbering for a given architecture:
//   0 = input, then per layer its heads followed by its MLP, then logits.
// Groups: input 0, heads of layer l 2l+1, MLP l 2l+2, logits 2L+1.
struct NodeLayout {
  int n_layers = 0;
  int n_heads = 0;

  int count() const { return 2 + n_layers * (n_heads + 1); }
  int input_index() const { return 0; }
  int logits_index() const { return count() - 1; }
  int head_index(int layer, int head) const { return 1 + layer * (n_heads + 1) + head; }
  int mlp_index(int layer) const { return 1 + layer * (n_heads + 1) + n_heads; }

  // Throws UnknownNode when the node does not exist in this layout.
  int index(const NodeId& node) const;
  NodeId at(int index) const;
  int group(int index) const;
  // True when `src` writes into the residual stream read by `dst`.
  bool feeds(int src, int dst) const { return group(src) < group(dst); }
};

}  // namespace mc::graph

#endif  // MC_GRAPH_NODE_ID_HPP_
