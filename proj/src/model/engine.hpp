// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

// Internal forward/backward machinery shared by inference, gradients, and
// training. Not installed.

#ifndef MC_SRC_MODEL_ENGINE_HPP_
#define MC_SRC_MODEL_ENGINE_HPP_

#include <map>
#include <vector>

#include "mc/model/transformer.hpp"

namespace mc::model::engine {

struct LnTrace {
  Matrix xhat;
  Vector inv_std;
};

struct HeadTrace {
  LnTrace ln;
  Matrix y, q, k, v, attn, z;
};

struct MlpTrace {
  LnTrace ln;
  Matrix y, pre, act;
};

struct ReadoutTrace {
  LnTrace ln;
  Matrix hidden;  // LN_final applied to every residual row
};

struct Run {
  std::vector<Matrix> inputs;   // per node; empty for the input node
  std::vector<Matrix> outputs;  // per node; empty for logits
  std::vector<HeadTrace> heads;  // per node index, used for head nodes
  std::vector<MlpTrace> mlps;    // per node index, used for MLP nodes
  ReadoutTrace readout;
  Matrix residual;
  Prediction prediction;
};

struct InputOffset {
  int node = -1;
  const Matrix* delta = nullptr;
};

Run run(const TransformerModel& model, const EmbeddedInput& input,
        const EdgePatch* patch = nullptr, const InputOffset* offset = nullptr);

// Gradient of a scalar objective w.r.t. the readout: a class-logit gradient
// and/or per-row MLM-logit gradients (keyed by sequence row, CLS = 0).
struct ReadoutGradient {
  std::optional<Vector> cls;
  std::map<int, Vector> mlm;
};

Vector mlm_logits(const TransformerModel& model, const Run& run, int row);
Vector log_softmax(const Vector& logits);
Vector softmax(const Vector& logits);

// Backpropagates through an unpatched run. input_grads[v] receives the
// gradient at node v's summed input (entry 0: the input node's output).
// When `grads` is non-null, parameter gradients are accumulated into it;
// embedding rows are scattered using `token_ids` (CLS included).
std::vector<Matrix> backward(const TransformerModel& model, const Run& run,
                             const ReadoutGradient& dreadout,
                             const std::vector<int>* token_ids, Parameters* grads);

}  // namespace mc::model::engine

#endif  // MC_SRC_MODEL_ENGINE_HPP_
