// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "doctest.h"
#include "mc/error.hpp"
#include "mc/model/checkpoint.hpp"
#include "mc/model/training.hpp"
#include "mc/random.hpp"
#include "support/fixtures.hpp"

using namespace mc;
using namespace mc::model;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = testing::tiny_config();
  CHECK_NOTHROW(c.validate());
  c.n_heads = 3;  // 8 not divisible by 3
  CHECK_THROWS_AS(c.validate(), ConfigInfeasible);
  c = testing::tiny_config();
  c.vocab_size = 2;
  CHECK_THROWS_AS(c.validate(), ConfigInfeasible);
}

TEST_CASE("residual stream is the sum of node outputs") {
  const TransformerModel m(testing::tiny_config(2, 2));
  const auto ids = testing::random_ids(6, 24, 1);
  const auto cache = forward_with_cache(m, ids);
  Matrix sum = Matrix::Zero(cache.residual.rows(), cache.residual.cols());
  for (int i = 0; i < cache.node_count(); ++i) sum += cache.output(i);
  CHECK((sum - cache.residual).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cache.seq_len() == 7);
  CHECK_THROWS_AS(cache.output(m.layout().logits_index()), MissingCacheEntry);
  const auto p = forward(m, ids);
  CHECK((p.logits - cache.prediction.logits).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(p.probs.sum() - 1.0) < 1e-12);
}

TEST_CASE("input validation") {
  const TransformerModel m(testing::tiny_config());
  CHECK_THROWS_AS(forward(m, testing::random_ids(12, 24, 1)), SequenceTooLong);
  const std::vector<int> bad = {4, 99};
  CHECK_THROWS_AS(forward(m, bad), PositionOutOfRange);
  GradientRequest r;
  r.label = 5;
  CHECK_THROWS_AS(gradients(m, testing::random_ids(4, 24, 2), r), UnknownLabel);
  r.label = 0;
  r.sites = {graph::NodeId::mlp(7)};
  CHECK_THROWS_AS(gradients(m, testing::random_ids(4, 24, 2), r), UnknownNode);
  CHECK_THROWS_AS(mlm_candidates(m, testing::random_ids(4, 24, 2), 4, 3), PositionOutOfRange);
}

TEST_CASE("node input gradients match central differences") {
  const TransformerModel m(testing::tiny_config(2, 2));
  const auto ids = testing::random_ids(5, 24, 3);
  const auto input = embed(m, ids);
  const auto layout = m.layout();
  for (auto metric : {MetricKind::ClassProbability, MetricKind::ClassLogit}) {
    GradientRequest req;
    req.metric = metric;
    req.label = 1;
    for (int i = 1; i < layout.count(); ++i) req.sites.push_back(layout.at(i));
    const auto g = gradients(m, input, req);
    Rng rng(17);
    for (int i = 1; i < layout.count(); ++i) {
      const Matrix& grad = g.node_input.at(layout.at(i));
      const int r = rng.below(static_cast<int>(grad.rows()));
      const int c = rng.below(static_cast<int>(grad.cols()));
      const double h = 1e-5;
      Matrix delta = Matrix::Zero(grad.rows(), grad.cols());
      delta(r, c) = h;
      auto value = [&](const Prediction& p) {
        return metric == MetricKind::ClassProbability ? p.probs(1) : p.logits(1);
      };
      const double up = value(forward_with_input_offset(m, input, i, delta));
      const double down = value(forward_with_input_offset(m, input, i, -delta));
      const double fd = (up - down) / (2 * h);
      INFO("node " << layout.at(i).label());
      if (std::abs(grad(r, c)) > 1e-7) CHECK(rel_err(grad(r, c), fd) < 1e-4);
      else CHECK(std::abs(fd) < 1e-6);
    }
  }
}

TEST_CASE("parameter gradients match central differences") {
  TransformerModel m(testing::tiny_config(2, 2));
  const auto ids = testing::random_ids(5, 24, 4);
  for (auto metric : {MetricKind::ClassProbability, MetricKind::MlmLogProb}) {
    GradientRequest req;
    req.metric = metric;
    req.label = 0;
    req.position = 2;
    req.target_token = 9;
    req.parameter_gradients = true;
    const auto g = gradients(m, ids, req);
    REQUIRE(g.parameters);
    auto grads = g.parameters->tensors();
    auto params = m.mutable_params().tensors();
    Rng rng(23);
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 25; ++trial) {
      const int t = rng.below(static_cast<int>(params.size()));
      if (params[t].empty()) continue;
      const int k = rng.below(static_cast<int>(params[t].size()));
      const double a = grads[t][k];
      if (std::abs(a) < 1e-6) continue;
      const double h = 1e-5;
      const double saved = params[t][k];
      params[t][k] = saved + h;
      const double up = metric_value(m, embed(m, ids), req);
      params[t][k] = saved - h;
      const double down = metric_value(m, embed(m, ids), req);
      params[t][k] = saved;
      CHECK(rel_err(a, (up - down) / (2 * h)) < 1e-4);
      ++checked;
    }
    CHECK(checked >= 10);
  }
}

TEST_CASE("input embedding gradient matches central differences") {
  const TransformerModel m(testing::tiny_config(1, 2));
  const auto ids = testing::random_ids(4, 24, 5);
  auto input = embed(m, ids);
  GradientRequest req;
  req.label = 1;
  const auto g = gradients(m, input, req);
  const double h = 1e-5;
  for (int r = 0; r < input.seq_len(); ++r) {
    const int c = r % static_cast<int>(input.embeddings.cols());
    auto plus = input;
    plus.embeddings(r, c) += h;
    auto minus = input;
    minus.embeddings(r, c) -= h;
    const double fd = (forward(m, plus).probs(1) - forward(m, minus).probs(1)) / (2 * h);
    CHECK(rel_err(g.input_output(r, c), fd) < 1e-4);
  }
}

TEST_CASE("interpolation endpoints") {
  const TransformerModel m(testing::tiny_config());
  const auto a = embed(m, testing::random_ids(4, 24, 6));
  const auto b = embed(m, testing::random_ids(4, 24, 7));
  CHECK(interpolate(a, b, 0.0).embeddings == a.embeddings);
  CHECK((interpolate(a, b, 1.0).embeddings - b.embeddings).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(interpolate(a, embed(m, testing::random_ids(5, 24, 8)), 0.5), LengthMismatch);
}

TEST_CASE("mlm candidates exclude specials and are sorted") {
  const TransformerModel m(testing::tiny_config());
  const auto ids = testing::random_ids(5, 24, 9);
  const auto c = mlm_candidates(m, ids, 1, 6);
  REQUIRE(c.size() == 6);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK_FALSE(text::is_special(c[i].token));
    if (i) CHECK(c[i - 1].log_prob >= c[i].log_prob);
  }
  const auto lp = mlm_log_probs(m, ids, 1);
  CHECK(std::abs(lp.array().exp().sum() - 1.0) < 1e-9);
}

TEST_CASE("checkpoint round trip is bit exact") {
  TransformerModel m(testing::tiny_config(2, 2, 24, 42));
  m.round_to_float32();
  const auto bytes = serialize_checkpoint(m);
  const auto back = deserialize_checkpoint(bytes);
  CHECK(back.config() == m.config());
  CHECK(serialize_checkpoint(back) == bytes);
  const auto pa = m.params().tensors();
  const auto pb = back.params().tensors();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t t = 0; t < pa.size(); ++t) {
    for (std::size_t k = 0; k < pa[t].size(); ++k) REQUIRE(pa[t][k] == pb[t][k]);
  }
  CHECK(checkpoint_hash(back) == checkpoint_hash(m));
  const auto dir = testing::scratch_dir("ckpt");
  save_checkpoint(m, dir / "m.ckpt");
  CHECK(serialize_checkpoint(load_checkpoint(dir / "m.ckpt")) == bytes);
  CHECK_THROWS_AS(deserialize_checkpoint("garbage"), ParseError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 4)), ParseError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), ParseError);
}

TEST_CASE("training is deterministic and learns") {
  const auto& t = testing::trained_language();
  CHECK(t.heldout_accuracy >= 0.9);
  // Same data and seeds give the same weights.
  const auto ex = corpora::to_examples(
      std::vector<corpora::Sentence>(t.lang.corpus.begin(), t.lang.corpus.begin() + 64),
      t.lang.vocab);
  auto cfg = testing::tiny_config(1, 2, t.lang.vocab.size(), 3);
  cfg.max_seq = 32;
  TrainingSchedule s;
  s.mlm_epochs = 1;
  s.cls_epochs = 1;
  TransformerModel a(cfg), b(cfg);
  const auto ra = train(a, ex, ex, s);
  train(b, ex, ex, s);
  CHECK(serialize_checkpoint(a) == serialize_checkpoint(b));
  REQUIRE(ra.epochs.size() == 2);
  CHECK(ra.epochs[0].phase == "mlm");
  CHECK(ra.epochs[1].phase == "cls");
  CHECK(ra.encoder.has_value());
}

TEST_CASE("non-finite loss raises DivergedLoss") {
  const auto& t = testing::trained_language();
  const auto ex = corpora::to_examples(
      std::vector<corpora::Sentence>(t.lang.corpus.begin(), t.lang.corpus.begin() + 32),
      t.lang.vocab);
  auto cfg = testing::tiny_config(1, 2, t.lang.vocab.size(), 3);
  cfg.max_seq = 32;
  TransformerModel m(cfg);
  TrainingSchedule s;
  s.mlm_epochs = 0;
  s.cls_epochs = 2;
  s.cls_learning_rate = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train(m, ex, ex, s), DivergedLoss);
}
