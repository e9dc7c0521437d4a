// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_MODEL_TRANSFORMER_HPP_
#define MC_MODEL_TRANSFORMER_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mc/graph/node_id.hpp"
#include "mc/model/config.hpp"

namespace mc::model {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using graph::NodeId;
using graph::NodeLayout;

struct LayerNorm {
  Vector gain;
  Vector bias;
};

struct AttentionHead {
  Matrix w_q;  // d_model x d_head
  Matrix w_k;
  Matrix w_v;
  Matrix w_o;  // d_head x d_model
};

struct Layer {
  LayerNorm ln_attn;
  std::vector<AttentionHead> heads;
  LayerNorm ln_mlp;
  Matrix w_in;  // d_model x d_ff
  Vector b_in;
  Matrix w_out;  // d_ff x d_model
  Vector b_out;
};

struct Parameters {
  Matrix token_embedding;     // vocab x d_model, also the tied MLM output
  Matrix position_embedding;  // max_seq x d_model
  std::vector<Layer> layers;
  LayerNorm ln_final;
  Matrix w_cls;  // d_model x n_classes
  Vector b_cls;
  Vector b_mlm;  // vocab

  static Parameters zeros(const ModelConfig& config);

  // Every tensor in the fixed serialization order; storage is Eigen's
  // column-major layout.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  static std::vector<std::string> tensor_names(const ModelConfig& config);
};

class TransformerModel {
 public:
  // Scaled-uniform initialization drawn from config.seed.
  explicit TransformerModel(const ModelConfig& config);
  TransformerModel(const ModelConfig& config, Parameters params);

  const ModelConfig& config() const { return config_; }
  NodeLayout layout() const { return {config_.n_layers, config_.n_heads}; }
  const Parameters& params() const { return params_; }
  Parameters& mutable_params() { return params_; }

  // Rounds every parameter to the nearest float32 so that checkpoints
  // reproduce the in-memory model exactly.
  void round_to_float32();

 private:
  ModelConfig config_;
  Parameters params_;
};

// Input-node output for one sequence: token plus position embeddings with a
// CLS row prepended. key_mask[t] is false for PAD positions, which are never
// attended to.
struct EmbeddedInput {
  Matrix embeddings;
  std::vector<bool> key_mask;
  std::vector<int> token_ids;  // CLS-prefixed; empty for interpolated inputs

  int seq_len() const { return static_cast<int>(embeddings.rows()); }
};

// Throws SequenceTooLong when ids.size() > max_seq - 1.
EmbeddedInput embed(const TransformerModel& model, std::span<const int> ids);

// Straight-line interpolation a + t (b - a) of the embedding rows.
EmbeddedInput interpolate(const EmbeddedInput& a, const EmbeddedInput& b, double t);

struct Prediction {
  Vector logits;
  Vector probs;

  int label() const;
};

// Per-node outputs of one forward pass. outputs[i] is indexed by the dense
// NodeLayout numbering; the logits node has no stored output.
struct ActivationCache {
  std::vector<Matrix> outputs;
  Matrix residual;  // pre-logits residual stream
  Prediction prediction;
  std::vector<bool> key_mask;

  int seq_len() const { return static_cast<int>(residual.rows()); }
  int node_count() const { return static_cast<int>(outputs.size()); }
  // Throws MissingCacheEntry for the logits node or an unknown index.
  const Matrix& output(int node_index) const;
};

Prediction forward(const TransformerModel& model, std::span<const int> ids);
Prediction forward(const TransformerModel& model, const EmbeddedInput& input);
ActivationCache forward_with_cache(const TransformerModel& model,
                                   std::span<const int> ids);
ActivationCache forward_with_cache(const TransformerModel& model,
                                   const EmbeddedInput& input);

// Final-layer-normed residual of every position (seq x d_model).
Matrix final_hidden_states(const TransformerModel& model, const EmbeddedInput& input);

// Edge-level patching: node `dst` reads the live output of `src` when
// live(src, dst) and the corrupted cache's output otherwise.
struct EdgePatch {
  const ActivationCache* corrupted = nullptr;
  int node_count = 0;
  std::vector<std::uint8_t> live;  // node_count x node_count, row = src

  bool is_live(int src, int dst) const {
    return live[static_cast<std::size_t>(src) * node_count + dst] != 0;
  }
};

// Throws LengthMismatch when the corrupted cache has a different length.
ActivationCache forward_patched(const TransformerModel& model,
                                const EmbeddedInput& input, const EdgePatch& patch);

// Adds `delta` to the summed input of one node and recomputes everything
// downstream. Used by finite-difference checks.
Prediction forward_with_input_offset(const TransformerModel& model,
                                     const EmbeddedInput& input, int node_index,
                                     const Matrix& delta);

enum class MetricKind { ClassProbability, ClassLogit, MlmLogProb };

struct GradientRequest {
  MetricKind metric = MetricKind::ClassProbability;
  int label = 0;
  // Word position (0-based, excluding CLS) and token for MlmLogProb.
  int position = 0;
  int target_token = 0;
  double scale = 1.0;
  // Nodes whose summed input gradient is wanted. Input has no input site;
  // its output gradient is always returned in `input_output`.
  std::vector<NodeId> sites;
  bool parameter_gradients = false;
};

struct GradientResult {
  double metric = 0.0;
  std::map<NodeId, Matrix> node_input;
  Matrix input_output;
  std::optional<Parameters> parameters;
};

// Analytic reverse-mode gradients of the scaled metric. Throws UnknownNode
// for a site outside the model's graph.
GradientResult gradients(const TransformerModel& model, std::span<const int> ids,
                         const GradientRequest& request);
GradientResult gradients(const TransformerModel& model, const EmbeddedInput& input,
                         const GradientRequest& request);

// Metric value on a finished prediction or MLM distribution.
double metric_value(const TransformerModel& model, const EmbeddedInput& input,
                    const GradientRequest& request);

// Gradients of the metric at every node input of one unpatched run, indexed by
// dense node number (entry 0, the input node, holds its output gradient).
struct NodeGradients {
  double metric = 0.0;
  std::vector<Matrix> input_grads;
};
NodeGradients node_input_gradients(const TransformerModel& model,
                                   const EmbeddedInput& input,
                                   const GradientRequest& request);

// MLM log-probabilities over the vocabulary at a word position.
Vector mlm_log_probs(const TransformerModel& model, std::span<const int> ids,
                     int position);

struct TokenScore {
  int token = 0;
  double log_prob = 0.0;
};

// Top-k non-special tokens at `position` with that position masked.
// Throws PositionOutOfRange.
std::vector<TokenScore> mlm_candidates(const TransformerModel& model,
                                       std::span<const int> ids, int position, int k);

}  // namespace mc::model

#endif  // MC_MODEL_TRANSFORMER_HPP_
