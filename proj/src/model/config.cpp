// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/model/config.hpp"

#include <string>

#include "mc/error.hpp"

namespace mc::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw ConfigInfeasible("model config: " + what);
  };
  if (n_layers < 0) fail("n_layers must be >= 0");
  if (n_heads < 1) fail("n_heads must be >= 1");
  if (d_model < 1 || d_model % n_heads != 0) {
    fail("d_model must be a positive multiple of n_heads");
  }
  if (d_ff < 1) fail("d_ff must be >= 1");
  if (max_seq < 2) fail("max_seq must be >= 2");
  if (n_classes < 2) fail("n_classes must be >= 2");
  if (vocab_size < 5) fail("vocab_size must cover the specials and a word");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_layers", c.n_layers}, {"n_heads", c.n_heads},
                     {"d_model", c.d_model},   {"d_ff", c.d_ff},
                     {"max_seq", c.max_seq},   {"n_classes", c.n_classes},
                     {"vocab_size", c.vocab_size}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.n_layers = j.value("n_layers", d.n_layers);
  c.n_heads = j.value("n_heads", d.n_heads);
  c.d_model = j.value("d_model", d.d_model);
  c.d_ff = j.value("d_ff", d.d_ff);
  c.max_seq = j.value("max_seq", d.max_seq);
  c.n_classes = j.value("n_classes", d.n_classes);
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.seed = j.value("seed", d.seed);
}

}  // namespace mc::model
