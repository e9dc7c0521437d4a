// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_HARNESS_PIPELINE_HPP_
#define MC_HARNESS_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mc/attacks/attack.hpp"
#include "mc/circuits/eap.hpp"
#include "mc/model/config.hpp"
#include "mc/model/training.hpp"

namespace mc::harness {

inline constexpr const char* kToolVersion = "0.1.0";

struct AttackSettings {
  int test_size = 100;
  std::vector<attacks::AttackMethod> methods = {
      attacks::AttackMethod::TextBugger, attacks::AttackMethod::TextFooler,
      attacks::AttackMethod::WordNetTextFooler, attacks::AttackMethod::BertAttack};
  attacks::ImportanceMethod importance = attacks::ImportanceMethod::Masking;
  double threshold = 0.90;
  double budget = 0.3;
  int k = 8;
  // "none", "mock", or an http:// endpoint; "env" reads the endpoint from
  // the environment and falls back to none.
  std::string nli = "mock";
};

struct Manifest {
  std::uint64_t seed = 7;
  std::string tool_version = kToolVersion;
  std::optional<std::filesystem::path> generator_config;
  int train_size = 2000;
  int heldout_size = 500;
  model::ModelConfig model;
  model::TrainingSchedule training;
  AttackSettings attack;
  circuits::EapConfig eap;
  std::vector<int> circuit_sizes;
  int diff_size = 50;
  // Paths relative to base_dir with their expected sha256.
  std::map<std::string, std::string> pins;
  std::filesystem::path base_dir = ".";

  static Manifest reference();
  // Relative paths resolve against the manifest's directory. Throws
  // ParseError.
  static Manifest load(const std::filesystem::path& path);
  static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::json to_json() const;
};

struct PipelineOptions {
  std::filesystem::path out_dir = "out";
  int jobs = 1;
  std::optional<std::uint64_t> seed;  // overrides the manifest seed
};

struct StageRecord {
  std::string name;
  bool skipped = false;
  double seconds = 0.0;
};

struct PipelineSummary {
  std::vector<StageRecord> stages;
  std::map<std::string, std::string> artifacts;  // relative path -> sha256

  nlohmann::json to_json() const;
};

// Runs generate, train, attack, similarity, parallel, eap, extract, eval,
// diff in order. A stage whose inputs, parameters and outputs are unchanged
// since its last run is skipped. Throws HashMismatch for a pinned input that
// differs and StageFailed wrapping any error raised inside a stage.
PipelineSummary run_pipeline(const Manifest& manifest, const PipelineOptions& options);

// Names of the stages in execution order.
const std::vector<std::string>& stage_names();

}  // namespace mc::harness

#endif  // MC_HARNESS_PIPELINE_HPP_
