// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_TESTS_SUPPORT_FIXTURES_HPP_
#define MC_TESTS_SUPPORT_FIXTURES_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "mc/corpora/minilang.hpp"
#include "mc/model/transformer.hpp"
#include "mc/text/text.hpp"

namespace mc::testing {

// Small random-init config; d_model divisible by every head count used.
model::ModelConfig tiny_config(int layers = 2, int heads = 2, int vocab = 24,
                               std::uint64_t seed = 5);

// Random ids in [kNumSpecials, vocab).
std::vector<int> random_ids(int n, int vocab, std::uint64_t seed);

// A Minilang language with a briefly trained classifier and its masked-LM
// snapshot. Built once per process.
struct TrainedLanguage {
  corpora::Minilang lang;
  std::vector<corpora::Sentence> heldout;
  model::TransformerModel classifier;
  model::TransformerModel encoder;
  double heldout_accuracy = 0.0;
};
const TrainedLanguage& trained_language();

// Independent enumeration of the component graph: every component that
// writes the residual stream before another component reads it feeds that
// component. Returns (node count, edge count).
std::pair<int, int> brute_force_graph_counts(int layers, int heads);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace mc::testing

#endif  // MC_TESTS_SUPPORT_FIXTURES_HPP_
