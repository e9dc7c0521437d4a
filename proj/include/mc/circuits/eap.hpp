// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_CIRCUITS_EAP_HPP_
#define MC_CIRCUITS_EAP_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mc/corpora/parallel.hpp"
#include "mc/graph/graph.hpp"
#include "mc/model/transformer.hpp"

namespace mc::circuits {

enum class EapMethod { Eap, EapIg };

std::string to_string(EapMethod m);  // "eap", "eap-ig"
EapMethod eap_method_from_string(std::string_view s);
std::string to_string(model::MetricKind m);
model::MetricKind metric_from_string(std::string_view s);

struct EapConfig {
  EapMethod method = EapMethod::EapIg;
  int ig_steps = 8;
  // ClassProbability or ClassLogit of the gold label.
  model::MetricKind metric = model::MetricKind::ClassProbability;

  // Plain EAP is EAP-IG with a single step at the clean endpoint.
  int effective_steps() const { return method == EapMethod::Eap ? 1 : ig_steps; }
  // Throws InputError.
  void validate() const;
};

struct EdgeScores {
  graph::NodeLayout layout;
  std::vector<double> scores;  // indexed like ComputationGraph::edges()
  EapConfig config;
  std::string dataset_fingerprint;
  std::string model_hash;
  int n_examples = 0;

  nlohmann::json to_json() const;
  static EdgeScores from_json(const nlohmann::json& j);
};

void save_scores(const EdgeScores& s, const std::filesystem::path& path);
EdgeScores load_scores(const std::filesystem::path& path);

// One clean/corrupted pair already in embedding space.
struct EmbeddedPair {
  model::EmbeddedInput clean;
  model::EmbeddedInput corrupted;
  int label = 0;
};

// Edge scores of a single pair (not averaged). Throws AlignmentError when the
// two inputs differ in length and NonFiniteScore on NaN or inf.
std::vector<double> score_pair(const model::TransformerModel& model,
                               const graph::ComputationGraph& graph, const EmbeddedPair& pair,
                               const EapConfig& config);

// Mean of score_pair over pairs. The reduction runs in pair order, so the
// result does not depend on `jobs`.
std::vector<double> score_pairs(const model::TransformerModel& model,
                                const graph::ComputationGraph& graph,
                                std::span<const EmbeddedPair> pairs, const EapConfig& config,
                                int jobs = 1);

EdgeScores score_edges(const model::TransformerModel& model,
                       const corpora::ParallelDataset& dataset, const EapConfig& config,
                       int jobs = 1);

std::vector<EmbeddedPair> embed_pairs(const model::TransformerModel& model,
                                      const corpora::ParallelDataset& dataset);

}  // namespace mc::circuits

#endif  // MC_CIRCUITS_EAP_HPP_
