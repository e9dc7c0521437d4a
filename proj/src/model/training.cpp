// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "engine.hpp"
#include "mc/error.hpp"
#include "mc/random.hpp"
#include "mc/text/text.hpp"

namespace mc::model {

namespace {

constexpr std::uint64_t kMlmSalt = 0x6d6c6d;
constexpr std::uint64_t kClsSalt = 0x636c73;
constexpr std::uint64_t kEvalMaskSalt = 0x6576616c;
constexpr std::size_t kMaxEvalExamples = 512;

struct MaskedExample {
  std::vector<int> ids;
  std::vector<int> positions;
  std::vector<int> targets;
};

MaskedExample mask_example(const LabeledExample& ex, double p, Rng& rng) {
  MaskedExample m;
  m.ids = ex.ids;
  for (int i = 0; i < static_cast<int>(ex.ids.size()); ++i) {
    if (rng.bernoulli(p)) m.positions.push_back(i);
  }
  if (m.positions.empty() && !ex.ids.empty()) {
    m.positions.push_back(rng.below(static_cast<int>(ex.ids.size())));
  }
  for (int pos : m.positions) {
    m.targets.push_back(ex.ids[pos]);
    m.ids[pos] = text::kMaskId;
  }
  return m;
}

// Accumulates the example's loss gradient into `grads`; returns the loss.
double mlm_step(const TransformerModel& model, const MaskedExample& m, Parameters& grads) {
  const EmbeddedInput in = embed(model, m.ids);
  const engine::Run r = engine::run(model, in);
  engine::ReadoutGradient g;
  double loss = 0.0;
  const double w = 1.0 / static_cast<double>(m.positions.size());
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    const int row = m.positions[i] + 1;
    const Vector lp = engine::log_softmax(engine::mlm_logits(model, r, row));
    loss -= w * lp(m.targets[i]);
    Vector d = lp.array().exp();
    d(m.targets[i]) -= 1.0;
    g.mlm.emplace(row, w * d);
  }
  engine::backward(model, r, g, &in.token_ids, &grads);
  return loss;
}

double cls_step(const TransformerModel& model, const LabeledExample& ex, Parameters& grads) {
  const EmbeddedInput in = embed(model, ex.ids);
  const engine::Run r = engine::run(model, in);
  const Vector& p = r.prediction.probs;
  engine::ReadoutGradient g;
  Vector d = p;
  d(ex.label) -= 1.0;
  g.cls = d;
  engine::backward(model, r, g, &in.token_ids, &grads);
  return -std::log(std::max(p(ex.label), 1e-300));
}

double masked_log_prob(const TransformerModel& model, const std::vector<MaskedExample>& set) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& m : set) {
    const EmbeddedInput in = embed(model, m.ids);
    const engine::Run r = engine::run(model, in);
    for (std::size_t i = 0; i < m.positions.size(); ++i) {
      const Vector lp = engine::log_softmax(engine::mlm_logits(model, r, m.positions[i] + 1));
      total += lp(m.targets[i]);
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

class MomentumSgd {
 public:
  MomentumSgd(const ModelConfig& config, double momentum)
      : velocity_(Parameters::zeros(config)), momentum_(momentum) {}

  void step(Parameters& params, Parameters& grads, double scale, double lr, double clip) {
    auto g = grads.tensors();
    double norm_sq = 0.0;
    for (auto t : g) {
      for (double& x : t) {
        x *= scale;
        norm_sq += x * x;
      }
    }
    const double norm = std::sqrt(norm_sq);
    const double clip_scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
    auto v = velocity_.tensors();
    auto p = params.tensors();
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p[i].size(); ++j) {
        v[i][j] = momentum_ * v[i][j] + clip_scale * g[i][j];
        p[i][j] -= lr * v[i][j];
      }
    }
  }

 private:
  Parameters velocity_;
  double momentum_;
};

void zero(Parameters& p) {
  for (auto t : p.tensors()) std::fill(t.begin(), t.end(), 0.0);
}

template <class StepFn>
double run_epoch(TransformerModel& model, std::size_t n, const TrainingSchedule& s,
                 MomentumSgd& opt, Parameters& grads, Rng& rng, double lr0,
                 std::size_t& step, std::size_t total_steps, StepFn&& example_step) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  const std::size_t batch = static_cast<std::size_t>(std::max(1, s.batch_size));
  double epoch_loss = 0.0;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    zero(grads);
    double batch_loss = 0.0;
    for (std::size_t i = start; i < end; ++i) batch_loss += example_step(order[i], grads);
    if (!std::isfinite(batch_loss)) return batch_loss;
    epoch_loss += batch_loss;
    const double lr = lr0 * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
    opt.step(model.mutable_params(), grads, 1.0 / static_cast<double>(end - start), lr,
             s.clip_norm);
    ++step;
  }
  return epoch_loss / static_cast<double>(n);
}

}  // namespace

double accuracy(const TransformerModel& model, std::span<const LabeledExample> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) correct += forward(model, ex.ids).label() == ex.label;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainingReport train(TransformerModel& model, std::span<const LabeledExample> train_set,
                     std::span<const LabeledExample> heldout,
                     const TrainingSchedule& schedule) {
  TrainingReport report;
  if (train_set.empty()) return report;
  const std::size_t n = train_set.size();
  const std::size_t batch = static_cast<std::size_t>(std::max(1, schedule.batch_size));
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  Parameters grads = Parameters::zeros(model.config());
  int global_epoch = 0;

  auto diverged = [&](int epoch) {
    throw DivergedLoss("training diverged (non-finite loss) in epoch " + std::to_string(epoch));
  };

  if (schedule.mlm_epochs > 0) {
    Rng eval_rng(mix_seed(schedule.seed, kEvalMaskSalt));
    std::vector<MaskedExample> eval_set;
    for (std::size_t i = 0; i < std::min(n, kMaxEvalExamples); ++i) {
      eval_set.push_back(mask_example(train_set[i], schedule.mask_probability, eval_rng));
    }
    MomentumSgd opt(model.config(), schedule.momentum);
    Rng rng(mix_seed(schedule.seed, kMlmSalt));
    std::size_t step = 0;
    const std::size_t total = steps_per_epoch * static_cast<std::size_t>(schedule.mlm_epochs);
    for (int e = 0; e < schedule.mlm_epochs; ++e, ++global_epoch) {
      const double loss = run_epoch(
          model, n, schedule, opt, grads, rng, schedule.mlm_learning_rate, step, total,
          [&](std::size_t i, Parameters& g) {
            return mlm_step(model, mask_example(train_set[i], schedule.mask_probability, rng),
                            g);
          });
      if (!std::isfinite(loss)) diverged(global_epoch);
      report.epochs.push_back(
          {"mlm", e, loss, masked_log_prob(model, eval_set), accuracy(model, heldout)});
    }
  }

  {
    TransformerModel snapshot(model.config(), model.params());
    snapshot.round_to_float32();
    report.encoder = std::move(snapshot.mutable_params());
  }

  if (schedule.cls_epochs > 0) {
    MomentumSgd opt(model.config(), schedule.momentum);
    Rng rng(mix_seed(schedule.seed, kClsSalt));
    std::size_t step = 0;
    const std::size_t total = steps_per_epoch * static_cast<std::size_t>(schedule.cls_epochs);
    for (int e = 0; e < schedule.cls_epochs; ++e, ++global_epoch) {
      const double loss = run_epoch(
          model, n, schedule, opt, grads, rng, schedule.cls_learning_rate, step, total,
          [&](std::size_t i, Parameters& g) { return cls_step(model, train_set[i], g); });
      if (!std::isfinite(loss)) diverged(global_epoch);
      report.epochs.push_back({"cls", e, loss, 0.0, accuracy(model, heldout)});
    }
  }

  model.round_to_float32();
  report.heldout_accuracy = accuracy(model, heldout);
  return report;
}

void to_json(nlohmann::json& j, const TrainingSchedule& s) {
  j = nlohmann::json{{"mlm_epochs", s.mlm_epochs},
                     {"cls_epochs", s.cls_epochs},
                     {"mlm_learning_rate", s.mlm_learning_rate},
                     {"cls_learning_rate", s.cls_learning_rate},
                     {"momentum", s.momentum},
                     {"batch_size", s.batch_size},
                     {"mask_probability", s.mask_probability},
                     {"clip_norm", s.clip_norm},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, TrainingSchedule& s) {
  TrainingSchedule d;
  s.mlm_epochs = j.value("mlm_epochs", d.mlm_epochs);
  s.cls_epochs = j.value("cls_epochs", d.cls_epochs);
  s.mlm_learning_rate = j.value("mlm_learning_rate", d.mlm_learning_rate);
  s.cls_learning_rate = j.value("cls_learning_rate", d.cls_learning_rate);
  s.momentum = j.value("momentum", d.momentum);
  s.batch_size = j.value("batch_size", d.batch_size);
  s.mask_probability = j.value("mask_probability", d.mask_probability);
  s.clip_norm = j.value("clip_norm", d.clip_norm);
  s.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const TrainingReport& r) {
  j = nlohmann::json::object();
  j["heldout_accuracy"] = r.heldout_accuracy;
  auto& epochs = j["epochs"] = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"phase", e.phase},
                      {"epoch", e.epoch},
                      {"loss", e.loss},
                      {"masked_log_prob", e.masked_log_prob},
                      {"heldout_accuracy", e.heldout_accuracy}});
  }
}

}  // namespace mc::model
