// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_MODEL_TRAINING_HPP_
#define MC_MODEL_TRAINING_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mc/model/transformer.hpp"

namespace mc::model {

struct LabeledExample {
  std::vector<int> ids;
  int label = 0;
};

// Two phases: optional masked-LM pretraining, then classifier fine-tuning.
// Each phase runs SGD with momentum and a learning rate that decays
// linearly to zero over the phase.
struct TrainingSchedule {
  int mlm_epochs = 4;
  int cls_epochs = 6;
  double mlm_learning_rate = 0.05;
  double cls_learning_rate = 0.02;
  double momentum = 0.9;
  int batch_size = 16;
  double mask_probability = 0.15;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  std::string phase;  // "mlm" or "cls"
  int epoch = 0;
  double loss = 0.0;
  // Mean log-probability of the true token at a fixed evaluation masking of
  // the training set (mlm phase only).
  double masked_log_prob = 0.0;
  double heldout_accuracy = 0.0;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  double heldout_accuracy = 0.0;
  // Weights at the end of the masked-LM phase, rounded to float32. Serves
  // as the task-agnostic sentence encoder for similarity scoring.
  std::optional<Parameters> encoder;
};

// Deterministic given (model init, data order, schedule). Throws DivergedLoss
// naming the epoch when a batch loss is not finite. Parameters are rounded to
// float32 at the end.
TrainingReport train(TransformerModel& model, std::span<const LabeledExample> train_set,
                     std::span<const LabeledExample> heldout,
                     const TrainingSchedule& schedule);

double accuracy(const TransformerModel& model, std::span<const LabeledExample> data);

void to_json(nlohmann::json& j, const TrainingSchedule& s);
void from_json(const nlohmann::json& j, TrainingSchedule& s);
void to_json(nlohmann::json& j, const TrainingReport& r);

}  // namespace mc::model

#endif  // MC_MODEL_TRAINING_HPP_
