// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/harness/reports.hpp"

#include <algorithm>
#include <set>

namespace mc::harness {

Table attack_table(const attacks::AttackReport& report, const std::string& dataset) {
  Table t({"dataset", "method", "n", "attempted", "successes", "clean_accuracy",
           "attacked_accuracy", "delta_accuracy", "success_rate", "mean_queries",
           "mean_perturbations"});
  for (const auto& r : report.rows) {
    t.add_row({dataset, attacks::short_name(r.method), r.n, r.attempted, r.successes,
               r.clean_accuracy, r.attacked_accuracy, r.delta_accuracy, r.success_rate,
               r.mean_queries, r.mean_perturbations});
  }
  return t;
}

Table similarity_table(const similarity::SimilarityReport& report, bool with_nli) {
  std::vector<std::string> cols = {"dataset", "method", "n", "rouge_mean", "rouge_std"};
  if (with_nli) {
    for (const char* c : {"nli_mean", "nli_std", "nli_below_0.2"}) cols.emplace_back(c);
  }
  cols.emplace_back("semantic_mean");
  cols.emplace_back("semantic_std");
  Table t(cols);
  for (const auto& row : report.rows) {
    const auto* rouge = row.find("rouge");
    const auto* sem = row.find("semantic");
    std::vector<nlohmann::json> cells = {row.dataset, row.method, rouge ? rouge->n : 0,
                                         rouge ? rouge->mean : 0.0, rouge ? rouge->std : 0.0};
    if (with_nli) {
      const auto* nli = row.find("nli");
      cells.push_back(nli ? nli->mean : 0.0);
      cells.push_back(nli ? nli->std : 0.0);
      cells.push_back(nli ? nli->fraction_below : 0.0);
    }
    cells.push_back(sem ? sem->mean : 0.0);
    cells.push_back(sem ? sem->std : 0.0);
    t.add_row(std::move(cells));
  }
  return t;
}

Table circuit_table(const CircuitSweep& sweep, const std::vector<std::string>& variants) {
  std::vector<std::string> cols = {"size"};
  for (const auto& v : variants) cols.push_back(v);
  for (const auto& v : variants) cols.push_back(v + "_accuracy");
  Table t(cols);
  std::vector<int> sizes;
  if (!variants.empty() && sweep.count(variants.front())) {
    for (const auto& r : sweep.at(variants.front())) sizes.push_back(r.size);
  }
  auto lookup = [&](const std::string& v, std::size_t i) -> const circuits::FaithfulnessReport* {
    auto it = sweep.find(v);
    if (it == sweep.end() || i >= it->second.size()) return nullptr;
    return &it->second[i];
  };
  {
    std::vector<nlohmann::json> row = {"baseline"};
    for (const auto& v : variants) {
      const auto* r = lookup(v, 0);
      row.push_back(r ? nlohmann::json(r->baseline) : nlohmann::json(nullptr));
    }
    for (const auto& v : variants) {
      const auto* r = lookup(v, 0);
      row.push_back(r ? nlohmann::json(r->baseline_accuracy) : nlohmann::json(nullptr));
    }
    t.add_row(std::move(row));
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::vector<nlohmann::json> row = {std::to_string(sizes[i])};
    for (const auto& v : variants) {
      const auto* r = lookup(v, i);
      row.push_back(r ? nlohmann::json(r->circuit) : nlohmann::json(nullptr));
    }
    for (const auto& v : variants) {
      const auto* r = lookup(v, i);
      row.push_back(r ? nlohmann::json(r->circuit_accuracy) : nlohmann::json(nullptr));
    }
    t.add_row(std::move(row));
  }
  return t;
}

Table robustness_table(const RobustnessByVariant& reports,
                       const std::vector<std::string>& variants) {
  std::vector<std::string> cols = {"method", "size", "n", "skipped"};
  for (const auto& v : variants) cols.push_back(v);
  Table t(cols);
  if (variants.empty() || !reports.count(variants.front())) return t;
  const auto& first = reports.at(variants.front()).rows;
  for (std::size_t i = 0; i < first.size(); ++i) {
    std::vector<nlohmann::json> row = {first[i].method, first[i].size, first[i].n,
                                       first[i].skipped};
    for (const auto& v : variants) {
      auto it = reports.find(v);
      if (it != reports.end() && i < it->second.rows.size()) {
        row.push_back(it->second.rows[i].accuracy);
      } else {
        row.push_back(nullptr);
      }
    }
    t.add_row(std::move(row));
  }
  return t;
}

bool diff_is_partition(const circuits::CircuitDiff& d, const circuits::Circuit& base,
                       const circuits::Circuit& overlay) {
  auto check = [](const auto& a, const auto& b, const auto& c, auto all) {
    std::size_t total = a.size() + b.size() + c.size();
    std::set<typename decltype(all)::value_type> got(a.begin(), a.end());
    got.insert(b.begin(), b.end());
    got.insert(c.begin(), c.end());
    return got.size() == total && got == all;
  };
  std::set<graph::NodeId> nodes;
  for (const auto& n : base.nodes()) nodes.insert(n);
  for (const auto& n : overlay.nodes()) nodes.insert(n);
  std::set<graph::Edge> edges(base.edges.begin(), base.edges.end());
  edges.insert(overlay.edges.begin(), overlay.edges.end());
  return check(d.shared_nodes, d.removed_nodes, d.added_nodes, nodes) &&
         check(d.shared_edges, d.removed_edges, d.added_edges, edges);
}

}  // namespace mc::harness
