// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "doctest.h"
#include "mc/circuits/circuit.hpp"
#include "mc/circuits/eap.hpp"
#include "mc/corpora/parallel.hpp"
#include "mc/error.hpp"
#include "mc/harness/reports.hpp"
#include "support/fixtures.hpp"

using namespace mc;
using namespace mc::circuits;

namespace {

const corpora::ParallelDataset& dataset() {
  static const corpora::ParallelDataset ds = [] {
    const auto& t = testing::trained_language();
    auto d = corpora::build_parallel(t.heldout, t.lang.lexicon, t.lang.vocab,
                                     corpora::Variant::Inflectional, 3);
    d.examples.resize(std::min<std::size_t>(d.examples.size(), 24));
    return d;
  }();
  return ds;
}

std::vector<EmbeddedPair> random_pairs(const model::TransformerModel& m, int n) {
  std::vector<EmbeddedPair> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({model::embed(m, testing::random_ids(5, 24, 100 + i)),
                   model::embed(m, testing::random_ids(5, 24, 200 + i)), i % 2});
  }
  return out;
}

}  // namespace

TEST_CASE("EAP score equals the directional derivative along the edge's activation change") {
  // Oracle: score(u, v) = d/dt metric(clean run with t * (corr_u - clean_u)
  // added to v's input) at t = 0, by central differences.
  const model::TransformerModel m(testing::tiny_config(2, 2));
  const graph::ComputationGraph g(m.layout());
  const auto pair = random_pairs(m, 1).front();
  EapConfig cfg;
  cfg.method = EapMethod::Eap;
  const auto scores = score_pair(m, g, pair, cfg);
  const auto clean = model::forward_with_cache(m, pair.clean);
  const auto corr = model::forward_with_cache(m, pair.corrupted);
  for (int e = 0; e < g.edge_count(); ++e) {
    const int u = g.src_index(e);
    const int v = g.dst_index(e);
    const model::Matrix diff = corr.output(u) - clean.output(u);
    const double h = 1e-6;
    const double up = model::forward_with_input_offset(m, pair.clean, v, h * diff).probs(pair.label);
    const double down =
        model::forward_with_input_offset(m, pair.clean, v, -h * diff).probs(pair.label);
    const double fd = (up - down) / (2 * h);
    INFO(g.edges()[e].label());
    CHECK(std::abs(scores[e] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("EAP-IG averages gradients over the interpolation path") {
  const model::TransformerModel m(testing::tiny_config(2, 2));
  const graph::ComputationGraph g(m.layout());
  const auto pair = random_pairs(m, 1).front();
  EapConfig cfg;
  cfg.ig_steps = 5;
  const auto scores = score_pair(m, g, pair, cfg);
  const auto clean = model::forward_with_cache(m, pair.clean);
  const auto corr = model::forward_with_cache(m, pair.corrupted);
  model::GradientRequest req;
  req.label = pair.label;
  std::vector<model::Matrix> mean(g.node_count());
  for (int k = 1; k <= 5; ++k) {
    const auto z = model::interpolate(pair.corrupted, pair.clean, k / 5.0);
    const auto grads = model::node_input_gradients(m, z, req);
    for (int v = 1; v < g.node_count(); ++v) {
      if (k == 1) mean[v] = grads.input_grads[v] / 5.0;
      else mean[v] += grads.input_grads[v] / 5.0;
    }
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const int u = g.src_index(e);
    const double expect = ((corr.output(u) - clean.output(u)).array() * mean[g.dst_index(e)].array()).sum();
    CHECK(std::abs(scores[e] - expect) < 1e-12);
  }
}

TEST_CASE("EAP-IG with one step is EAP") {
  const model::TransformerModel m(testing::tiny_config(2, 2));
  const graph::ComputationGraph g(m.layout());
  const auto pairs = random_pairs(m, 6);
  EapConfig eap;
  eap.method = EapMethod::Eap;
  EapConfig ig;
  ig.ig_steps = 1;
  const auto a = score_pairs(m, g, pairs, eap);
  const auto b = score_pairs(m, g, pairs, ig);
  for (std::size_t e = 0; e < a.size(); ++e) CHECK(std::abs(a[e] - b[e]) <= 1e-9);
}

TEST_CASE("scores do not depend on the worker count") {
  const model::TransformerModel m(testing::tiny_config(2, 2));
  const graph::ComputationGraph g(m.layout());
  const auto pairs = random_pairs(m, 9);
  EapConfig cfg;
  CHECK(score_pairs(m, g, pairs, cfg, 1) == score_pairs(m, g, pairs, cfg, 4));
}

TEST_CASE("EAP configuration and alignment errors") {
  EapConfig cfg;
  cfg.ig_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.ig_steps = 4;
  cfg.metric = model::MetricKind::MlmLogProb;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  CHECK(eap_method_from_string("eap-ig") == EapMethod::EapIg);
  CHECK(to_string(EapMethod::Eap) == "eap");
  CHECK_THROWS_AS(eap_method_from_string("ig"), InputError);
  const model::TransformerModel m(testing::tiny_config(2, 2));
  const graph::ComputationGraph g(m.layout());
  EmbeddedPair bad{model::embed(m, testing::random_ids(5, 24, 1)),
                   model::embed(m, testing::random_ids(4, 24, 2)), 0};
  CHECK_THROWS_AS(score_pair(m, g, bad, EapConfig{}), AlignmentError);
}

TEST_CASE("edge scores save and load") {
  const auto& t = testing::trained_language();
  const auto s = score_edges(t.classifier, dataset(), EapConfig{});
  CHECK(s.n_examples == static_cast<int>(dataset().examples.size()));
  CHECK(s.dataset_fingerprint == corpora::fingerprint(dataset()));
  const auto dir = testing::scratch_dir("scores");
  save_scores(s, dir / "s.json");
  const auto back = load_scores(dir / "s.json");
  CHECK(back.scores == s.scores);
  CHECK(back.model_hash == s.model_hash);
  CHECK(back.config.ig_steps == 8);
}

TEST_CASE("extraction takes the top edges by magnitude") {
  EdgeScores s;
  s.layout = {1, 1};  // 6 edges
  s.scores = {0.1, -0.5, 0.3, 0.5, -0.05, 0.0};
  const graph::ComputationGraph g(s.layout);
  const auto c = extract_circuit(s, 3);
  REQUIRE(c.edges.size() == 3);
  // |-0.5| ties with 0.5; the lexicographically smaller edge wins.
  const auto e1 = g.edges()[1], e3 = g.edges()[3];
  CHECK(c.edges[0] == std::min(e1, e3));
  CHECK(c.edges[1] == std::max(e1, e3));
  CHECK(c.edges[2] == g.edges()[2]);
  const auto signed_c = extract_circuit(s, 2, Ranking::Signed);
  CHECK(signed_c.edges[0] == g.edges()[3]);
  CHECK(signed_c.edges[1] == g.edges()[2]);
  CHECK(extract_circuit(s, 300).edges.size() == 6);
  CHECK(extract_circuit(s, 300).size == 300);
  CHECK(extract_circuit(s, 0).edges.empty());
  s.scores.pop_back();
  CHECK_THROWS_AS(extract_circuit(s, 2), GraphMismatch);
}

TEST_CASE("circuit JSON round trip") {
  EdgeScores s;
  s.layout = {2, 2};
  s.scores.assign(26, 0.0);
  for (int i = 0; i < 26; ++i) s.scores[i] = std::sin(i + 1.0);
  const auto c = extract_circuit(s, 10);
  const auto back = Circuit::from_json(c.to_json());
  CHECK(back.edges == c.edges);
  CHECK(back.scores == c.scores);
  CHECK(back.size == 10);
  CHECK(c.to_json().contains("graph_hash"));
  const auto dir = testing::scratch_dir("circuit");
  save_circuit(c, dir / "c.json");
  CHECK(load_circuit(dir / "c.json").edges == c.edges);
  std::set<graph::NodeId> nodes;
  for (const auto& e : c.edges) {
    nodes.insert(e.src);
    nodes.insert(e.dst);
  }
  CHECK(c.nodes() == std::vector<graph::NodeId>(nodes.begin(), nodes.end()));
}

TEST_CASE("full circuit is the clean run and empty circuit the corrupted run") {
  const auto& t = testing::trained_language();
  const auto s = score_edges(t.classifier, dataset(), EapConfig{});
  const int total = graph::ComputationGraph(t.classifier.layout()).edge_count();
  const auto full = evaluate_circuit(t.classifier, extract_circuit(s, total), dataset(), 2);
  const auto empty = evaluate_circuit(t.classifier, extract_circuit(s, 0), dataset(), 2);
  CHECK(std::abs(full.circuit - full.baseline) < 1e-6);
  CHECK(std::abs(empty.circuit - empty.corrupted) < 1e-6);
  CHECK(full.circuit_accuracy == full.baseline_accuracy);
  CHECK(full.n == static_cast<int>(dataset().examples.size()));
  double mean = 0.0;
  for (const auto& ex : full.examples) mean += ex.baseline;
  CHECK(std::abs(mean / full.n - full.baseline) < 1e-12);
  Circuit wrong = extract_circuit(s, 5);
  wrong.layout = {1, 1};
  CHECK_THROWS_AS(evaluate_circuit(t.classifier, wrong, dataset()), GraphMismatch);
}

TEST_CASE("diff partitions nodes and edges") {
  EdgeScores a, b;
  a.layout = b.layout = {2, 2};
  for (int i = 0; i < 26; ++i) {
    a.scores.push_back(std::cos(i * 1.3));
    b.scores.push_back(std::cos(i * 0.7));
  }
  const auto ca = extract_circuit(a, 8);
  const auto cb = extract_circuit(b, 8);
  const auto d = diff_circuits(ca, cb);
  CHECK(harness::diff_is_partition(d, ca, cb));
  CHECK(d.shared_edges.size() + d.removed_edges.size() == 8);
  CHECK(d.shared_edges.size() + d.added_edges.size() == 8);
  const auto dot = d.to_dot();
  if (!d.shared_nodes.empty()) CHECK(dot.find("shape=box") != std::string::npos);
  if (!d.removed_nodes.empty()) CHECK(dot.find("style=dashed") != std::string::npos);
  if (!d.added_nodes.empty()) CHECK(dot.find("shape=triangle") != std::string::npos);
  const auto self = diff_circuits(ca, ca);
  CHECK(self.removed_edges.empty());
  CHECK(self.added_edges.empty());
  Circuit other = cb;
  other.layout = {3, 2};
  CHECK_THROWS_AS(diff_circuits(ca, other), GraphMismatch);
}

TEST_CASE("robustness rows per method with a mean row") {
  const auto& t = testing::trained_language();
  const auto s = score_edges(t.classifier, dataset(), EapConfig{});
  std::vector<Circuit> circuits;
  for (int n : kCircuitSizes) circuits.push_back(extract_circuit(s, n));
  std::vector<attacks::AttackOutcome> outcomes;
  const auto& ex = dataset().examples;
  for (int i = 0; i < 4; ++i) {
    attacks::AttackOutcome o;
    o.id = std::to_string(i);
    o.method = i < 2 ? attacks::AttackMethod::TextFooler : attacks::AttackMethod::BertAttack;
    o.original = ex[i].clean;
    o.adversarial = ex[i].corrupted;
    o.label = ex[i].label;
    outcomes.push_back(o);
  }
  outcomes[3].adversarial = text::tokenize("a b c", t.lang.vocab);  // unaligned
  const auto r = evaluate_circuit_on_attacks(t.classifier, circuits, outcomes);
  REQUIRE(r.rows.size() == 14);
  CHECK(r.rows[0].method == "tf");
  CHECK(r.rows[6].size == "mean");
  CHECK(r.rows[7].method == "ba");
  CHECK(r.rows[7].n == 1);
  CHECK(r.rows[7].skipped == 1);
  double mean = 0.0;
  for (int i = 0; i < 6; ++i) mean += r.rows[i].accuracy / 6.0;
  CHECK(std::abs(r.rows[6].accuracy - mean) < 1e-12);
}
