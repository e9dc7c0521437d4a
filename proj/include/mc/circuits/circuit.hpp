// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_CIRCUITS_CIRCUIT_HPP_
#define MC_CIRCUITS_CIRCUIT_HPP_

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mc/attacks/attack.hpp"
#include "mc/circuits/eap.hpp"
#include "mc/corpora/parallel.hpp"
#include "mc/graph/graph.hpp"

namespace mc::circuits {

inline constexpr std::array<int, 6> kCircuitSizes = {50, 75, 100, 150, 200, 300};

enum class Ranking { Absolute, Signed };

struct Circuit {
  graph::NodeLayout layout;
  int size = 0;  // requested N
  std::vector<graph::Edge> edges;  // in rank order
  std::vector<double> scores;      // parallel to edges
  EapMethod method = EapMethod::EapIg;
  int ig_steps = 8;

  std::vector<graph::NodeId> nodes() const;  // incident to an edge, sorted
  nlohmann::json to_json() const;
  static Circuit from_json(const nlohmann::json& j);
};

void save_circuit(const Circuit& c, const std::filesystem::path& path);
Circuit load_circuit(const std::filesystem::path& path);

// Top-N edges by |score| (or by signed score) with ties broken by
// lexicographic edge order. N is clipped to the edge count.
Circuit extract_circuit(const EdgeScores& scores, int n, Ranking ranking = Ranking::Absolute);

struct ExampleFaithfulness {
  std::string id;
  double baseline = 0.0;
  double circuit = 0.0;
  double corrupted = 0.0;
  bool baseline_correct = false;
  bool circuit_correct = false;
};

struct FaithfulnessReport {
  int size = 0;
  int n = 0;
  double baseline = 0.0;   // mean gold-class probability, clean, unpatched
  double circuit = 0.0;    // mean gold-class probability, patched
  double corrupted = 0.0;  // mean gold-class probability, corrupted input
  double baseline_accuracy = 0.0;
  double circuit_accuracy = 0.0;
  double corrupted_accuracy = 0.0;
  std::vector<ExampleFaithfulness> examples;

  nlohmann::json to_json() const;
};

// Patched runs: edges outside the circuit read the corrupted activations.
// Throws AlignmentError.
FaithfulnessReport evaluate_circuit(const model::TransformerModel& model, const Circuit& circuit,
                                    const corpora::ParallelDataset& dataset, int jobs = 1);

struct RobustnessRow {
  std::string method;  // attack short name
  std::string size;    // circuit size, or "mean"
  int n = 0;
  int skipped = 0;  // token counts differ
  double accuracy = 0.0;
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;
  nlohmann::json to_json() const;
};

// Clean input = adversarial text, corrupted cache = original text. Uses every
// attempted outcome; unaligned pairs are skipped and counted. Rows per
// (method, size) in first-seen method order, then a mean row per method.
RobustnessReport evaluate_circuit_on_attacks(const model::TransformerModel& model,
                                             std::span<const Circuit> circuits,
                                             std::span<const attacks::AttackOutcome> outcomes,
                                             int jobs = 1);

struct CircuitDiff {
  std::vector<graph::NodeId> shared_nodes;
  std::vector<graph::NodeId> removed_nodes;
  std::vector<graph::NodeId> added_nodes;
  std::vector<graph::Edge> shared_edges;
  std::vector<graph::Edge> removed_edges;
  std::vector<graph::Edge> added_edges;

  nlohmann::json to_json() const;
  // Box for shared, dashed for removed, triangle for added.
  std::string to_dot() const;
};

// `base` plays the syncretic role, `overlay` the inflectional one. Throws
// GraphMismatch when the circuits come from different architectures.
CircuitDiff diff_circuits(const Circuit& base, const Circuit& overlay);

}  // namespace mc::circuits

#endif  // MC_CIRCUITS_CIRCUIT_HPP_
