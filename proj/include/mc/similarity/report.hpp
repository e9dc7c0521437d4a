// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_SIMILARITY_REPORT_HPP_
#define MC_SIMILARITY_REPORT_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mc/attacks/attack.hpp"
#include "mc/similarity/nli.hpp"
#include "mc/similarity/semantic.hpp"

namespace mc::similarity {

inline constexpr int kHistogramBins = 20;  // width 0.05 over [0, 1]
inline constexpr double kLowScore = 0.2;

struct MetricStats {
  std::string metric;  // "rouge", "nli", "semantic"
  int n = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double fraction_below = 0.0;  // share of scores < kLowScore
  std::array<int, kHistogramBins> histogram{};
  std::vector<double> scores;

  nlohmann::json to_json() const;
};

// Scores are clamped to [0, 1] before binning.
MetricStats summarize_scores(std::string metric, std::span<const double> scores);

struct SimilarityRow {
  std::string dataset;
  std::string method;
  std::vector<MetricStats> metrics;  // rouge, [nli], semantic

  const MetricStats* find(const std::string& metric) const;
};

struct SimilarityReport {
  std::vector<SimilarityRow> rows;
  nlohmann::json to_json() const;
};

// One row per attack method in first-seen order, over successful outcomes
// only. ROUGE is ROUGE-L F1; semantic is the mapped cosine (raw + 1) / 2 from
// `encoder`. The NLI column is omitted when `nli` is null.
SimilarityReport similarity_report(std::span<const attacks::AttackOutcome> outcomes,
                                   const SimilarityProvider& encoder, const NliProvider* nli,
                                   const std::string& dataset, int jobs = 1);

}  // namespace mc::similarity

#endif  // MC_SIMILARITY_REPORT_HPP_
