// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/graph/node_id.hpp"

#include <charconv>

#include "mc/error.hpp"

namespace mc::graph {

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty() || s.front() == '-' || (s.size() > 1 && s.front() == '0')) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::string NodeId::label() const {
  switch (kind) {
    case NodeKind::Input:
      return "input";
    case NodeKind::Logits:
      return "logits";
    case NodeKind::Mlp:
      return "m" + std::to_string(layer);
    case NodeKind::Head:
      return "a" + std::to_string(layer) + ".h" + std::to_string(head);
  }
  return {};
}

NodeId NodeId::parse(std::string_view label) {
  if (label == "input") return input();
  if (label == "logits") return logits();
  int layer = 0;
  int head = 0;
  if (label.size() > 1 && label[0] == 'm' && parse_int(label.substr(1), layer)) {
    return mlp(layer);
  }
  if (label.size() > 1 && label[0] == 'a') {
    const auto dot = label.find(".h");
    if (dot != std::string_view::npos &&
        parse_int(label.substr(1, dot - 1), layer) &&
        parse_int(label.substr(dot + 2), head)) {
      return attention(layer, head);
    }
  }
  throw UnknownNode("unknown node label '" + std::string(label) + "'");
}

int NodeLayout::index(const NodeId& node) const {
  switch (node.kind) {
    case NodeKind::Input:
      return input_index();
    case NodeKind::Logits:
      return logits_index();
    case NodeKind::Mlp:
      if (node.layer >= 0 && node.layer < n_layers) return mlp_index(node.layer);
      break;
    case NodeKind::Head:
      if (node.layer >= 0 && node.layer < n_layers && node.head >= 0 &&
          node.head < n_heads) {
        return head_index(node.layer, node.head);
      }
      break;
  }
  throw UnknownNode("node " + node.label() + " is not part of a " +
                    std::to_string(n_layers) + "x" + std::to_string(n_heads) +
                    " model");
}

NodeId NodeLayout::at(int index) const {
  if (index < 0 || index >= count()) {
    throw UnknownNode("node index " + std::to_string(index) + " out of range");
  }
  if (index == 0) return NodeId::input();
  if (index == logits_index()) return NodeId::logits();
  const int layer = (index - 1) / (n_heads + 1);
  const int slot = (index - 1) % (n_heads + 1);
  return slot == n_heads ? NodeId::mlp(layer) : NodeId::attention(layer, slot);
}

int NodeLayout::group(int index) const {
  if (index == 0) return 0;
  if (index == logits_index()) return 2 * n_layers + 1;
  const int layer = (index - 1) / (n_heads + 1);
  const int slot = (index - 1) % (n_heads + 1);
  return slot == n_heads ? 2 * layer + 2 : 2 * layer + 1;
}

}  // namespace mc::graph
