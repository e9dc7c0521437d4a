// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_SIMILARITY_SEMANTIC_HPP_
#define MC_SIMILARITY_SEMANTIC_HPP_

#include <string_view>

#include "mc/model/transformer.hpp"
#include "mc/text/text.hpp"

namespace mc::similarity {

// Mean over non-PAD positions (CLS included) of the final-layer-normed
// residual stream. Throws EmptyText.
model::Vector sentence_embedding(const model::TransformerModel& model,
                                 const text::Vocabulary& vocab, std::string_view text);

struct SemanticScore {
  double raw = 0.0;     // cosine in [-1, 1]
  double mapped = 0.0;  // (raw + 1) / 2, used for reporting
};

SemanticScore semantic_similarity(const model::TransformerModel& model,
                                  const text::Vocabulary& vocab, std::string_view a,
                                  std::string_view b);

double cosine(const model::Vector& a, const model::Vector& b);

// Sentence-similarity oracle used by the attack filter.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double raw_cosine(std::string_view a, std::string_view b) const = 0;
};

class ModelSimilarity : public SimilarityProvider {
 public:
  ModelSimilarity(const model::TransformerModel& model, const text::Vocabulary& vocab)
      : model_(model), vocab_(vocab) {}

  double raw_cosine(std::string_view a, std::string_view b) const override {
    return semantic_similarity(model_, vocab_, a, b).raw;
  }

 private:
  const model::TransformerModel& model_;
  const text::Vocabulary& vocab_;
};

}  // namespace mc::similarity

#endif  // MC_SIMILARITY_SEMANTIC_HPP_
