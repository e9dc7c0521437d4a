// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/similarity/rouge.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "mc/error.hpp"
#include "mc/text/text.hpp"

namespace mc::similarity {

namespace {

using Words = std::vector<std::string>;

double f1(double overlap, double n_ref, double n_cand) {
  if (overlap <= 0.0 || n_ref <= 0.0 || n_cand <= 0.0) return 0.0;
  const double p = overlap / n_cand;
  const double r = overlap / n_ref;
  return 2.0 * p * r / (p + r);
}

double ngram_f1(const Words& ref, const Words& cand, std::size_t n) {
  if (ref.size() < n || cand.size() < n) return 0.0;
  std::map<Words, int> counts;
  for (std::size_t i = 0; i + n <= ref.size(); ++i) {
    ++counts[Words(ref.begin() + i, ref.begin() + i + n)];
  }
  int overlap = 0;
  for (std::size_t i = 0; i + n <= cand.size(); ++i) {
    auto it = counts.find(Words(cand.begin() + i, cand.begin() + i + n));
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return f1(overlap, static_cast<double>(ref.size() - n + 1),
            static_cast<double>(cand.size() - n + 1));
}

std::size_t lcs(const Words& a, const Words& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::string to_string(RougeVariant v) {
  switch (v) {
    case RougeVariant::R1:
      return "rouge1";
    case RougeVariant::R2:
      return "rouge2";
    case RougeVariant::RL:
      return "rougeL";
  }
  return {};
}

double rouge(std::string_view reference, std::string_view candidate, RougeVariant variant) {
  const Words ref = text::split_words(reference);
  const Words cand = text::split_words(candidate);
  if (ref.empty() || cand.empty()) throw EmptyText("rouge needs two non-empty texts");
  if (ref == cand) return 1.0;
  switch (variant) {
    case RougeVariant::R1:
      return ngram_f1(ref, cand, 1);
    case RougeVariant::R2:
      return ngram_f1(ref, cand, 2);
    case RougeVariant::RL:
      return f1(static_cast<double>(lcs(ref, cand)), static_cast<double>(ref.size()),
                static_cast<double>(cand.size()));
  }
  return 0.0;
}

}  // namespace mc::similarity
