// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/similarity/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mc/parallel.hpp"
#include "mc/similarity/rouge.hpp"

namespace mc::similarity {

nlohmann::json MetricStats::to_json() const {
  return {{"metric", metric},     {"n", n},
          {"mean", mean},         {"std", std},
          {"fraction_below_0.2", fraction_below}, {"histogram", histogram},
          {"scores", scores}};
}

MetricStats summarize_scores(std::string metric, std::span<const double> scores) {
  MetricStats s;
  s.metric = std::move(metric);
  s.n = static_cast<int>(scores.size());
  for (double x : scores) s.scores.push_back(std::clamp(x, 0.0, 1.0));
  if (s.scores.empty()) return s;
  double sum = 0.0;
  for (double x : s.scores) sum += x;
  s.mean = sum / s.n;
  double var = 0.0;
  for (double x : s.scores) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / s.n);
  int low = 0;
  for (double x : s.scores) {
    const int bin = std::min(kHistogramBins - 1, static_cast<int>(x * kHistogramBins));
    ++s.histogram[bin];
    low += x < kLowScore;
  }
  s.fraction_below = static_cast<double>(low) / s.n;
  return s;
}

const MetricStats* SimilarityRow::find(const std::string& metric) const {
  for (const auto& m : metrics) {
    if (m.metric == metric) return &m;
  }
  return nullptr;
}

nlohmann::json SimilarityReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& m : row.metrics) metrics.push_back(m.to_json());
    out.push_back({{"dataset", row.dataset}, {"method", row.method}, {"metrics", metrics}});
  }
  return {{"rows", out}};
}

SimilarityReport similarity_report(std::span<const attacks::AttackOutcome> outcomes,
                                   const SimilarityProvider& encoder, const NliProvider* nli,
                                   const std::string& dataset, int jobs) {
  std::vector<std::string> methods;
  std::map<std::string, std::vector<const attacks::AttackOutcome*>> groups;
  for (const auto& o : outcomes) {
    const auto m = attacks::short_name(o.method);
    if (!groups.count(m)) methods.push_back(m);
    if (o.success) groups[m].push_back(&o);
  }
  SimilarityReport report;
  for (const auto& m : methods) {
    const auto& group = groups[m];
    const std::size_t n = group.size();
    std::vector<double> r(n), e(n), s(n);
    parallel_for(n, jobs, [&](std::size_t i) {
      const std::string a = text::detokenize(group[i]->original);
      const std::string b = text::detokenize(group[i]->adversarial);
      r[i] = rouge(a, b, RougeVariant::RL);
      s[i] = (encoder.raw_cosine(a, b) + 1.0) / 2.0;
      if (nli != nullptr) e[i] = nli_entailment(*nli, a, b);
    });
    SimilarityRow row{dataset, m, {}};
    row.metrics.push_back(summarize_scores("rouge", r));
    if (nli != nullptr) row.metrics.push_back(summarize_scores("nli", e));
    row.metrics.push_back(summarize_scores("semantic", s));
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace mc::similarity
