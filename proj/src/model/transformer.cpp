// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "engine.hpp"
#include "mc/error.hpp"
#include "mc/random.hpp"
#include "mc/text/text.hpp"

namespace mc::model {

namespace {

constexpr double kLnEps = 1e-5;

LayerNorm ln_zeros(int d) { return {Vector::Zero(d), Vector::Zero(d)}; }

template <class P, class Span>
std::vector<Span> collect_tensors(P& p) {
  std::vector<Span> out;
  auto add = [&out](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
  add(p.token_embedding);
  add(p.position_embedding);
  for (auto& layer : p.layers) {
    add(layer.ln_attn.gain);
    add(layer.ln_attn.bias);
    for (auto& h : layer.heads) {
      add(h.w_q);
      add(h.w_k);
      add(h.w_v);
      add(h.w_o);
    }
    add(layer.ln_mlp.gain);
    add(layer.ln_mlp.bias);
    add(layer.w_in);
    add(layer.b_in);
    add(layer.w_out);
    add(layer.b_out);
  }
  add(p.ln_final.gain);
  add(p.ln_final.bias);
  add(p.w_cls);
  add(p.b_cls);
  add(p.b_mlm);
  return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

}  // namespace

Parameters Parameters::zeros(const ModelConfig& c) {
  Parameters p;
  const int d = c.d_model;
  p.token_embedding = Matrix::Zero(c.vocab_size, d);
  p.position_embedding = Matrix::Zero(c.max_seq, d);
  p.layers.resize(c.n_layers);
  for (auto& layer : p.layers) {
    layer.ln_attn = ln_zeros(d);
    layer.heads.resize(c.n_heads);
    for (auto& h : layer.heads) {
      h.w_q = Matrix::Zero(d, c.d_head());
      h.w_k = Matrix::Zero(d, c.d_head());
      h.w_v = Matrix::Zero(d, c.d_head());
      h.w_o = Matrix::Zero(c.d_head(), d);
    }
    layer.ln_mlp = ln_zeros(d);
    layer.w_in = Matrix::Zero(d, c.d_ff);
    layer.b_in = Vector::Zero(c.d_ff);
    layer.w_out = Matrix::Zero(c.d_ff, d);
    layer.b_out = Vector::Zero(d);
  }
  p.ln_final = ln_zeros(d);
  p.w_cls = Matrix::Zero(d, c.n_classes);
  p.b_cls = Vector::Zero(c.n_classes);
  p.b_mlm = Vector::Zero(c.vocab_size);
  return p;
}

std::vector<std::span<double>> Parameters::tensors() {
  return collect_tensors<Parameters, std::span<double>>(*this);
}

std::vector<std::span<const double>> Parameters::tensors() const {
  return collect_tensors<const Parameters, std::span<const double>>(*this);
}

std::vector<std::string> Parameters::tensor_names(const ModelConfig& c) {
  std::vector<std::string> names{"token_embedding", "position_embedding"};
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string pre = "layers." + std::to_string(l) + ".";
    names.push_back(pre + "ln_attn.gain");
    names.push_back(pre + "ln_attn.bias");
    for (int h = 0; h < c.n_heads; ++h) {
      const std::string hp = pre + "heads." + std::to_string(h) + ".";
      for (const char* w : {"w_q", "w_k", "w_v", "w_o"}) names.push_back(hp + w);
    }
    for (const char* w : {"ln_mlp.gain", "ln_mlp.bias", "w_in", "b_in", "w_out", "b_out"}) {
      names.push_back(pre + w);
    }
  }
  for (const char* w : {"ln_final.gain", "ln_final.bias", "w_cls", "b_cls", "b_mlm"}) {
    names.emplace_back(w);
  }
  return names;
}

TransformerModel::TransformerModel(const ModelConfig& config)
    : config_(config), params_(Parameters::zeros(config)) {
  config_.validate();
  Rng rng(config_.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.d_model));
  auto fill = [&](Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  };
  fill(params_.token_embedding);
  fill(params_.position_embedding);
  for (auto& layer : params_.layers) {
    layer.ln_attn.gain.setOnes();
    for (auto& h : layer.heads) {
      fill(h.w_q);
      fill(h.w_k);
      fill(h.w_v);
      fill(h.w_o);
    }
    layer.ln_mlp.gain.setOnes();
    fill(layer.w_in);
    fill(layer.w_out);
  }
  params_.ln_final.gain.setOnes();
  fill(params_.w_cls);
  round_to_float32();
}

TransformerModel::TransformerModel(const ModelConfig& config, Parameters params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
}

void TransformerModel::round_to_float32() {
  for (auto t : params_.tensors()) {
    for (double& x : t) x = static_cast<double>(static_cast<float>(x));
  }
}

int Prediction::label() const {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

const Matrix& ActivationCache::output(int node_index) const {
  if (node_index < 0 || node_index >= node_count() || outputs[node_index].size() == 0) {
    throw MissingCacheEntry("activation cache has no output for node " +
                            std::to_string(node_index));
  }
  return outputs[node_index];
}

EmbeddedInput embed(const TransformerModel& model, std::span<const int> ids) {
  const auto& c = model.config();
  if (static_cast<int>(ids.size()) > c.max_seq - 1) {
    throw SequenceTooLong("sequence of " + std::to_string(ids.size()) +
                          " tokens exceeds max_seq - 1 = " + std::to_string(c.max_seq - 1));
  }
  const int seq = static_cast<int>(ids.size()) + 1;
  EmbeddedInput in;
  in.embeddings.resize(seq, c.d_model);
  in.key_mask.assign(seq, true);
  in.token_ids.reserve(seq);
  in.token_ids.push_back(text::kClsId);
  in.token_ids.insert(in.token_ids.end(), ids.begin(), ids.end());
  const auto& p = model.params();
  for (int t = 0; t < seq; ++t) {
    const int id = in.token_ids[t];
    if (id < 0 || id >= c.vocab_size) {
      throw PositionOutOfRange("token id " + std::to_string(id) + " outside vocabulary");
    }
    in.embeddings.row(t) = p.token_embedding.row(id) + p.position_embedding.row(t);
    in.key_mask[t] = id != text::kPadId;
  }
  return in;
}

EmbeddedInput interpolate(const EmbeddedInput& a, const EmbeddedInput& b, double t) {
  if (a.seq_len() != b.seq_len()) {
    throw LengthMismatch("interpolate: sequence lengths differ");
  }
  EmbeddedInput out;
  out.embeddings = a.embeddings + t * (b.embeddings - a.embeddings);
  out.key_mask.resize(a.key_mask.size());
  for (std::size_t i = 0; i < a.key_mask.size(); ++i) {
    out.key_mask[i] = a.key_mask[i] || b.key_mask[i];
  }
  return out;
}

namespace engine {

namespace {

Matrix ln_forward(const LayerNorm& ln, const Matrix& x, LnTrace& tr) {
  const Eigen::Index d = x.cols();
  tr.xhat.resize(x.rows(), d);
  tr.inv_std.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    tr.inv_std(r) = inv;
    tr.xhat.row(r) = (x.row(r).array() - mean) * inv;
  }
  Matrix y = tr.xhat.array().rowwise() * ln.gain.transpose().array();
  y.rowwise() += ln.bias.transpose();
  return y;
}

Matrix ln_backward(const LayerNorm& ln, const LnTrace& tr, const Matrix& dy,
                   LayerNorm* grad) {
  if (grad) {
    grad->gain += (dy.array() * tr.xhat.array()).colwise().sum().transpose().matrix();
    grad->bias += dy.colwise().sum().transpose();
  }
  const Matrix dxhat = dy.array().rowwise() * ln.gain.transpose().array();
  const double d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double sum = dxhat.row(r).sum();
    const double dot = dxhat.row(r).dot(tr.xhat.row(r));
    dx.row(r) = (tr.inv_std(r) / d) *
                (d * dxhat.row(r).array() - sum - tr.xhat.row(r).array() * dot);
  }
  return dx;
}

void softmax_rows_inplace(Matrix& s, const std::vector<bool>& key_mask) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (key_mask[c]) mx = std::max(mx, s(r, c));
    }
    double total = 0.0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      const double e = key_mask[c] ? std::exp(s(r, c) - mx) : 0.0;
      s(r, c) = e;
      total += e;
    }
    s.row(r) /= total;
  }
}

Matrix head_forward(const AttentionHead& w, const LayerNorm& ln, const Matrix& x,
                    const std::vector<bool>& key_mask, HeadTrace& tr) {
  tr.y = ln_forward(ln, x, tr.ln);
  tr.q = tr.y * w.w_q;
  tr.k = tr.y * w.w_k;
  tr.v = tr.y * w.w_v;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.w_q.cols()));
  tr.attn = (tr.q * tr.k.transpose()) * scale;
  softmax_rows_inplace(tr.attn, key_mask);
  tr.z = tr.attn * tr.v;
  return tr.z * w.w_o;
}

Matrix head_backward(const AttentionHead& w, const LayerNorm& ln, const HeadTrace& tr,
                     const Matrix& dout, AttentionHead* gw, LayerNorm* gln) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.w_q.cols()));
  const Matrix dz = dout * w.w_o.transpose();
  const Matrix dattn = dz * tr.v.transpose();
  const Matrix dv = tr.attn.transpose() * dz;
  const Vector row_dot = (dattn.array() * tr.attn.array()).rowwise().sum();
  Matrix ds = tr.attn.array() * (dattn.array().colwise() - row_dot.array());
  ds *= scale;
  const Matrix dq = ds * tr.k;
  const Matrix dk = ds.transpose() * tr.q;
  if (gw) {
    gw->w_o += tr.z.transpose() * dout;
    gw->w_q += tr.y.transpose() * dq;
    gw->w_k += tr.y.transpose() * dk;
    gw->w_v += tr.y.transpose() * dv;
  }
  const Matrix dy = dq * w.w_q.transpose() + dk * w.w_k.transpose() + dv * w.w_v.transpose();
  return ln_backward(ln, tr.ln, dy, gln);
}

Matrix mlp_forward(const Layer& layer, const Matrix& x, MlpTrace& tr) {
  tr.y = ln_forward(layer.ln_mlp, x, tr.ln);
  tr.pre = tr.y * layer.w_in;
  tr.pre.rowwise() += layer.b_in.transpose();
  tr.act = tr.pre.unaryExpr([](double v) { return gelu(v); });
  Matrix out = tr.act * layer.w_out;
  out.rowwise() += layer.b_out.transpose();
  return out;
}

Matrix mlp_backward(const Layer& layer, const MlpTrace& tr, const Matrix& dout,
                    Layer* g) {
  const Matrix dact = dout * layer.w_out.transpose();
  const Matrix dpre =
      dact.array() * tr.pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
  if (g) {
    g->w_out += tr.act.transpose() * dout;
    g->b_out += dout.colwise().sum().transpose();
    g->w_in += tr.y.transpose() * dpre;
    g->b_in += dpre.colwise().sum().transpose();
  }
  const Matrix dy = dpre * layer.w_in.transpose();
  return ln_backward(layer.ln_mlp, tr.ln, dy, g ? &g->ln_mlp : nullptr);
}

}  // namespace

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp();
  return e / e.sum();
}

Vector log_softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return logits.array() - lse;
}

Run run(const TransformerModel& model, const EmbeddedInput& input, const EdgePatch* patch,
        const InputOffset* offset) {
  const auto& p = model.params();
  const NodeLayout layout = model.layout();
  const int n = layout.count();
  const int seq = input.seq_len();
  if (patch) {
    if (!patch->corrupted || patch->node_count != n) {
      throw MissingCacheEntry("edge patch does not match the model graph");
    }
    if (patch->corrupted->seq_len() != seq) {
      throw LengthMismatch("clean input has " + std::to_string(seq) +
                           " positions but corrupted cache has " +
                           std::to_string(patch->corrupted->seq_len()));
    }
  }

  Run r;
  r.inputs.resize(n);
  r.outputs.resize(n);
  r.heads.resize(n);
  r.mlps.resize(n);
  r.outputs[0] = input.embeddings;

  for (int v = 1; v < n; ++v) {
    Matrix x = Matrix::Zero(seq, model.config().d_model);
    for (int u = 0; u < v; ++u) {
      if (!layout.feeds(u, v)) continue;
      if (patch && !patch->is_live(u, v)) {
        x += patch->corrupted->output(u);
      } else {
        x += r.outputs[u];
      }
    }
    if (offset && offset->node == v) x += *offset->delta;
    if (v == layout.logits_index()) {
      r.inputs[v] = x;
      break;
    }
    const NodeId node = layout.at(v);
    const Layer& layer = p.layers[node.layer];
    if (node.kind == graph::NodeKind::Head) {
      r.outputs[v] = head_forward(layer.heads[node.head], layer.ln_attn, x,
                                  input.key_mask, r.heads[v]);
    } else {
      r.outputs[v] = mlp_forward(layer, x, r.mlps[v]);
    }
    r.inputs[v] = std::move(x);
  }

  r.residual = r.inputs[layout.logits_index()];
  r.readout.hidden = ln_forward(p.ln_final, r.residual, r.readout.ln);
  r.prediction.logits = (r.readout.hidden.row(0) * p.w_cls).transpose() + p.b_cls;
  r.prediction.probs = softmax(r.prediction.logits);
  return r;
}

Vector mlm_logits(const TransformerModel& model, const Run& run, int row) {
  const auto& p = model.params();
  return p.token_embedding * run.readout.hidden.row(row).transpose() + p.b_mlm;
}

std::vector<Matrix> backward(const TransformerModel& model, const Run& run,
                             const ReadoutGradient& dreadout,
                             const std::vector<int>* token_ids, Parameters* grads) {
  const auto& p = model.params();
  const NodeLayout layout = model.layout();
  const int n = layout.count();

  Matrix dhidden = Matrix::Zero(run.readout.hidden.rows(), run.readout.hidden.cols());
  if (dreadout.cls) {
    dhidden.row(0) += (p.w_cls * *dreadout.cls).transpose();
    if (grads) {
      grads->w_cls += run.readout.hidden.row(0).transpose() * dreadout.cls->transpose();
      grads->b_cls += *dreadout.cls;
    }
  }
  for (const auto& [row, dlog] : dreadout.mlm) {
    dhidden.row(row) += (p.token_embedding.transpose() * dlog).transpose();
    if (grads) {
      grads->token_embedding += dlog * run.readout.hidden.row(row);
      grads->b_mlm += dlog;
    }
  }

  std::vector<Matrix> gin(n);
  gin[layout.logits_index()] =
      ln_backward(p.ln_final, run.readout.ln, dhidden, grads ? &grads->ln_final : nullptr);

  for (int v = n - 2; v >= 0; --v) {
    Matrix gout = Matrix::Zero(gin[n - 1].rows(), gin[n - 1].cols());
    for (int w = v + 1; w < n; ++w) {
      if (layout.feeds(v, w)) gout += gin[w];
    }
    if (v == 0) {
      if (grads && token_ids) {
        for (int t = 0; t < static_cast<int>(token_ids->size()); ++t) {
          grads->token_embedding.row((*token_ids)[t]) += gout.row(t);
          grads->position_embedding.row(t) += gout.row(t);
        }
      }
      gin[0] = std::move(gout);
      break;
    }
    const NodeId node = layout.at(v);
    const Layer& layer = p.layers[node.layer];
    Layer* glayer = grads ? &grads->layers[node.layer] : nullptr;
    if (node.kind == graph::NodeKind::Head) {
      gin[v] = head_backward(layer.heads[node.head], layer.ln_attn, run.heads[v], gout,
                             glayer ? &glayer->heads[node.head] : nullptr,
                             glayer ? &glayer->ln_attn : nullptr);
    } else {
      gin[v] = mlp_backward(layer, run.mlps[v], gout, glayer);
    }
  }
  return gin;
}

}  // namespace engine

namespace {

ActivationCache to_cache(engine::Run&& r, const EmbeddedInput& input) {
  ActivationCache cache;
  cache.outputs = std::move(r.outputs);
  cache.outputs.pop_back();  // logits has no output
  cache.residual = std::move(r.residual);
  cache.prediction = std::move(r.prediction);
  cache.key_mask = input.key_mask;
  return cache;
}

int checked_row(const EmbeddedInput& input, int position) {
  if (position < 0 || position + 1 >= input.seq_len()) {
    throw PositionOutOfRange("position " + std::to_string(position) +
                             " outside a sequence of " +
                             std::to_string(input.seq_len() - 1) + " words");
  }
  return position + 1;
}

engine::ReadoutGradient metric_gradient(const TransformerModel& model,
                                        const engine::Run& run,
                                        const EmbeddedInput& input,
                                        const GradientRequest& req, double& value) {
  engine::ReadoutGradient g;
  const auto& probs = run.prediction.probs;
  const int n_classes = static_cast<int>(probs.size());
  if (req.metric != MetricKind::MlmLogProb && (req.label < 0 || req.label >= n_classes)) {
    throw UnknownLabel("label " + std::to_string(req.label) + " outside the class range");
  }
  switch (req.metric) {
    case MetricKind::ClassProbability: {
      value = req.scale * probs(req.label);
      Vector d = -probs(req.label) * probs;
      d(req.label) += probs(req.label);
      g.cls = req.scale * d;
      break;
    }
    case MetricKind::ClassLogit: {
      value = req.scale * run.prediction.logits(req.label);
      Vector d = Vector::Zero(n_classes);
      d(req.label) = req.scale;
      g.cls = d;
      break;
    }
    case MetricKind::MlmLogProb: {
      const int row = checked_row(input, req.position);
      if (req.target_token < 0 || req.target_token >= model.config().vocab_size) {
        throw PositionOutOfRange("target token outside vocabulary");
      }
      const Vector logits = engine::mlm_logits(model, run, row);
      const Vector lp = engine::log_softmax(logits);
      value = req.scale * lp(req.target_token);
      Vector d = -lp.array().exp();
      d(req.target_token) += 1.0;
      g.mlm.emplace(row, req.scale * d);
      break;
    }
  }
  return g;
}

}  // namespace

Prediction forward(const TransformerModel& model, std::span<const int> ids) {
  return forward(model, embed(model, ids));
}

Prediction forward(const TransformerModel& model, const EmbeddedInput& input) {
  return engine::run(model, input).prediction;
}

ActivationCache forward_with_cache(const TransformerModel& model, std::span<const int> ids) {
  return forward_with_cache(model, embed(model, ids));
}

ActivationCache forward_with_cache(const TransformerModel& model, const EmbeddedInput& input) {
  return to_cache(engine::run(model, input), input);
}

Matrix final_hidden_states(const TransformerModel& model, const EmbeddedInput& input) {
  return engine::run(model, input).readout.hidden;
}

ActivationCache forward_patched(const TransformerModel& model, const EmbeddedInput& input,
                                const EdgePatch& patch) {
  return to_cache(engine::run(model, input, &patch), input);
}

Prediction forward_with_input_offset(const TransformerModel& model,
                                     const EmbeddedInput& input, int node_index,
                                     const Matrix& delta) {
  const NodeLayout layout = model.layout();
  if (node_index <= 0 || node_index >= layout.count()) {
    throw UnknownNode("node index " + std::to_string(node_index) + " has no input site");
  }
  if (delta.rows() != input.seq_len() || delta.cols() != model.config().d_model) {
    throw LengthMismatch("offset shape does not match the node input");
  }
  const engine::InputOffset offset{node_index, &delta};
  return engine::run(model, input, nullptr, &offset).prediction;
}

double metric_value(const TransformerModel& model, const EmbeddedInput& input,
                    const GradientRequest& request) {
  const engine::Run r = engine::run(model, input);
  double value = 0.0;
  metric_gradient(model, r, input, request, value);
  return value;
}

GradientResult gradients(const TransformerModel& model, std::span<const int> ids,
                         const GradientRequest& request) {
  return gradients(model, embed(model, ids), request);
}

GradientResult gradients(const TransformerModel& model, const EmbeddedInput& input,
                         const GradientRequest& request) {
  const NodeLayout layout = model.layout();
  std::vector<int> site_index;
  site_index.reserve(request.sites.size());
  for (const auto& s : request.sites) {
    const int idx = layout.index(s);
    if (idx == layout.input_index()) {
      throw UnknownNode("the input node has no input site");
    }
    site_index.push_back(idx);
  }

  const engine::Run r = engine::run(model, input);
  GradientResult result;
  const auto dreadout = metric_gradient(model, r, input, request, result.metric);
  std::optional<Parameters> grads;
  if (request.parameter_gradients) grads = Parameters::zeros(model.config());
  auto gin = engine::backward(model, r, dreadout,
                              input.token_ids.empty() ? nullptr : &input.token_ids,
                              grads ? &*grads : nullptr);
  for (std::size_t i = 0; i < site_index.size(); ++i) {
    result.node_input.emplace(request.sites[i], gin[site_index[i]]);
  }
  result.input_output = std::move(gin[0]);
  result.parameters = std::move(grads);
  return result;
}

NodeGradients node_input_gradients(const TransformerModel& model, const EmbeddedInput& input,
                                   const GradientRequest& request) {
  const engine::Run r = engine::run(model, input);
  NodeGradients out;
  const auto dreadout = metric_gradient(model, r, input, request, out.metric);
  out.input_grads = engine::backward(model, r, dreadout, nullptr, nullptr);
  return out;
}

Vector mlm_log_probs(const TransformerModel& model, std::span<const int> ids, int position) {
  const EmbeddedInput input = embed(model, ids);
  const int row = checked_row(input, position);
  const engine::Run r = engine::run(model, input);
  return engine::log_softmax(engine::mlm_logits(model, r, row));
}

std::vector<TokenScore> mlm_candidates(const TransformerModel& model,
                                       std::span<const int> ids, int position, int k) {
  if (position < 0 || position >= static_cast<int>(ids.size())) {
    throw PositionOutOfRange("mlm position " + std::to_string(position) +
                             " outside a sequence of " + std::to_string(ids.size()) +
                             " words");
  }
  std::vector<int> masked(ids.begin(), ids.end());
  masked[position] = text::kMaskId;
  const Vector lp = mlm_log_probs(model, masked, position);
  std::vector<TokenScore> all;
  for (int t = text::kNumSpecials; t < lp.size(); ++t) all.push_back({t, lp(t)});
  std::stable_sort(all.begin(), all.end(), [](const TokenScore& a, const TokenScore& b) {
    return a.log_prob > b.log_prob;
  });
  if (k < static_cast<int>(all.size())) all.resize(std::max(k, 0));
  return all;
}

}  // namespace mc::model
