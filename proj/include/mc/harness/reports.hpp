// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_HARNESS_REPORTS_HPP_
#define MC_HARNESS_REPORTS_HPP_

#include <map>
#include <string>
#include <vector>

#include "mc/attacks/attack.hpp"
#include "mc/circuits/circuit.hpp"
#include "mc/harness/table.hpp"
#include "mc/similarity/report.hpp"

namespace mc::harness {

// One row per attack method.
Table attack_table(const attacks::AttackReport& report, const std::string& dataset);

// One row per (dataset, method); mean and std per metric.
Table similarity_table(const similarity::SimilarityReport& report, bool with_nli);

// Rows: "baseline" then one per circuit size. Per variant, the mean
// gold-class probability and accuracy.
using CircuitSweep = std::map<std::string, std::vector<circuits::FaithfulnessReport>>;
Table circuit_table(const CircuitSweep& sweep, const std::vector<std::string>& variants);

// Per method block: one row per size plus a "mean" row; one accuracy column
// per variant.
using RobustnessByVariant = std::map<std::string, circuits::RobustnessReport>;
Table robustness_table(const RobustnessByVariant& reports, const std::vector<std::string>& variants);

// True when the node sets and the edge sets of `d` are disjoint and their
// unions equal the union of both circuits.
bool diff_is_partition(const circuits::CircuitDiff& d, const circuits::Circuit& base,
                       const circuits::Circuit& overlay);

}  // namespace mc::harness

#endif  // MC_HARNESS_REPORTS_HPP_
