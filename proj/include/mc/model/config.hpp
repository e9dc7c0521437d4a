// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_MODEL_CONFIG_HPP_
#define MC_MODEL_CONFIG_HPP_

#include <cstdint>

#include "json.hpp"

namespace mc::model {

struct ModelConfig {
  int n_layers = 3;
  int n_heads = 4;
  int d_model = 32;
  int d_ff = 64;
  int max_seq = 32;
  int n_classes = 2;
  int vocab_size = 0;
  std::uint64_t seed = 0;

  int d_head() const { return d_model / n_heads; }
  // Throws ConfigInfeasible.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace mc::model

#endif  // MC_MODEL_CONFIG_HPP_
