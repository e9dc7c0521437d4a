// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_SIMILARITY_ROUGE_HPP_
#define MC_SIMILARITY_ROUGE_HPP_

#include <string>
#include <string_view>

namespace mc::similarity {

enum class RougeVariant { R1, R2, RL };

std::string to_string(RougeVariant v);

// F1 over lowercased whitespace tokens. Identical token sequences score 1 for
// every variant. Throws EmptyText.
double rouge(std::string_view reference, std::string_view candidate,
             RougeVariant variant = RougeVariant::RL);

}  // namespace mc::similarity

#endif  // MC_SIMILARITY_ROUGE_HPP_
