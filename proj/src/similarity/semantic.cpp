// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/similarity/semantic.hpp"

#include <algorithm>
#include <cmath>

namespace mc::similarity {

model::Vector sentence_embedding(const model::TransformerModel& model,
                                 const text::Vocabulary& vocab, std::string_view text) {
  const auto tokens = text::tokenize(text, vocab);
  const auto input = model::embed(model, tokens.ids);
  const model::Matrix hidden = model::final_hidden_states(model, input);
  model::Vector sum = model::Vector::Zero(hidden.cols());
  int count = 0;
  for (int t = 0; t < hidden.rows(); ++t) {
    if (!input.key_mask[t]) continue;
    sum += hidden.row(t).transpose();
    ++count;
  }
  return sum / static_cast<double>(std::max(count, 1));
}

double cosine(const model::Vector& a, const model::Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

SemanticScore semantic_similarity(const model::TransformerModel& model,
                                  const text::Vocabulary& vocab, std::string_view a,
                                  std::string_view b) {
  SemanticScore s;
  if (a == b) {
    sentence_embedding(model, vocab, a);  // still validates the input
    s.raw = 1.0;
  } else {
    s.raw = cosine(sentence_embedding(model, vocab, a), sentence_embedding(model, vocab, b));
  }
  s.mapped = (s.raw + 1.0) / 2.0;
  return s;
}

}  // namespace mc::similarity
