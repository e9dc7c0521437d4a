// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/circuits/eap.hpp"

#include <cmath>

#include "mc/error.hpp"
#include "mc/hash.hpp"
#include "mc/model/checkpoint.hpp"
#include "mc/parallel.hpp"

namespace mc::circuits {

std::string to_string(EapMethod m) { return m == EapMethod::Eap ? "eap" : "eap-ig"; }

EapMethod eap_method_from_string(std::string_view s) {
  if (s == "eap") return EapMethod::Eap;
  if (s == "eap-ig" || s == "eap_ig") return EapMethod::EapIg;
  throw InputError("unknown EAP method '" + std::string(s) + "'");
}

std::string to_string(model::MetricKind m) {
  switch (m) {
    case model::MetricKind::ClassProbability:
      return "class-prob";
    case model::MetricKind::ClassLogit:
      return "class-logit";
    case model::MetricKind::MlmLogProb:
      return "mlm-logprob";
  }
  return {};
}

model::MetricKind metric_from_string(std::string_view s) {
  if (s == "class-prob") return model::MetricKind::ClassProbability;
  if (s == "class-logit") return model::MetricKind::ClassLogit;
  if (s == "mlm-logprob") return model::MetricKind::MlmLogProb;
  throw InputError("unknown metric '" + std::string(s) + "'");
}

void EapConfig::validate() const {
  if (ig_steps < 1) throw InputError("ig_steps must be at least 1");
  if (metric == model::MetricKind::MlmLogProb) {
    throw InputError("edge scoring needs a classification metric");
  }
}

nlohmann::json EdgeScores::to_json() const {
  const graph::ComputationGraph g(layout);
  nlohmann::json edges = nlohmann::json::array();
  for (int e = 0; e < g.edge_count(); ++e) {
    edges.push_back({{"src", g.edges()[e].src.label()},
                     {"dst", g.edges()[e].dst.label()},
                     {"score", scores.at(e)}});
  }
  return {{"layers", layout.n_layers},
          {"heads", layout.n_heads},
          {"graph_hash", g.config_hash()},
          {"method", to_string(config.method)},
          {"ig_steps", config.ig_steps},
          {"metric", to_string(config.metric)},
          {"dataset", dataset_fingerprint},
          {"model", model_hash},
          {"n_examples", n_examples},
          {"edges", edges}};
}

EdgeScores EdgeScores::from_json(const nlohmann::json& j) {
  EdgeScores s;
  try {
    s.layout = {j.at("layers").get<int>(), j.at("heads").get<int>()};
    s.config.method = eap_method_from_string(j.at("method").get<std::string>());
    s.config.ig_steps = j.at("ig_steps").get<int>();
    s.config.metric = metric_from_string(j.value("metric", std::string("class-prob")));
    s.dataset_fingerprint = j.value("dataset", std::string());
    s.model_hash = j.value("model", std::string());
    s.n_examples = j.value("n_examples", 0);
    const graph::ComputationGraph g(s.layout);
    s.scores.assign(g.edge_count(), 0.0);
    std::vector<bool> seen(g.edge_count(), false);
    for (const auto& e : j.at("edges")) {
      const graph::Edge edge{graph::NodeId::parse(e.at("src").get<std::string>()),
                             graph::NodeId::parse(e.at("dst").get<std::string>())};
      const auto idx = g.find(edge);
      if (!idx) throw GraphMismatch("edge " + edge.label() + " is not in the graph");
      s.scores[*idx] = e.at("score").get<double>();
      seen[*idx] = true;
    }
    for (int e = 0; e < g.edge_count(); ++e) {
      if (!seen[e]) throw ParseError("edge scores: missing edge " + g.edges()[e].label());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("edge scores: ") + e.what());
  }
  return s;
}

void save_scores(const EdgeScores& s, const std::filesystem::path& path) {
  write_file(path, s.to_json().dump(2) + "\n");
}

EdgeScores load_scores(const std::filesystem::path& path) {
  try {
    return EdgeScores::from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<double> score_pair(const model::TransformerModel& model,
                               const graph::ComputationGraph& graph, const EmbeddedPair& pair,
                               const EapConfig& config) {
  config.validate();
  if (pair.clean.seq_len() != pair.corrupted.seq_len()) {
    throw AlignmentError("clean and corrupted inputs differ in length (" +
                         std::to_string(pair.clean.seq_len()) + " vs " +
                         std::to_string(pair.corrupted.seq_len()) + ")");
  }
  const auto clean = model::forward_with_cache(model, pair.clean);
  const auto corrupted = model::forward_with_cache(model, pair.corrupted);
  const int n_nodes = graph.node_count();

  model::GradientRequest req;
  req.metric = config.metric;
  req.label = pair.label;
  const int m = config.effective_steps();
  std::vector<model::Matrix> grads;
  for (int k = 1; k <= m; ++k) {
    const double t = static_cast<double>(k) / m;
    const auto input = k == m ? pair.clean : model::interpolate(pair.corrupted, pair.clean, t);
    auto g = model::node_input_gradients(model, input, req);
    if (grads.empty()) {
      grads = std::move(g.input_grads);
    } else {
      for (int v = 1; v < n_nodes; ++v) grads[v] += g.input_grads[v];
    }
  }
  if (m > 1) {
    for (int v = 1; v < n_nodes; ++v) grads[v] /= m;
  }

  std::vector<model::Matrix> diff(n_nodes - 1);
  for (int u = 0; u + 1 < n_nodes; ++u) diff[u] = corrupted.output(u) - clean.output(u);

  std::vector<double> scores(graph.edge_count());
  for (int e = 0; e < graph.edge_count(); ++e) {
    const double s = diff[graph.src_index(e)].cwiseProduct(grads[graph.dst_index(e)]).sum();
    if (!std::isfinite(s)) {
      throw NonFiniteScore("non-finite score on edge " + graph.edges()[e].label());
    }
    scores[e] = s;
  }
  return scores;
}

std::vector<double> score_pairs(const model::TransformerModel& model,
                                const graph::ComputationGraph& graph,
                                std::span<const EmbeddedPair> pairs, const EapConfig& config,
                                int jobs) {
  config.validate();
  std::vector<std::vector<double>> per(pairs.size());
  parallel_for(pairs.size(), jobs,
               [&](std::size_t i) { per[i] = score_pair(model, graph, pairs[i], config); });
  std::vector<double> mean(graph.edge_count(), 0.0);
  if (pairs.empty()) return mean;
  for (const auto& p : per) {
    for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += p[e];
  }
  for (auto& x : mean) x /= static_cast<double>(pairs.size());
  return mean;
}

std::vector<EmbeddedPair> embed_pairs(const model::TransformerModel& model,
                                      const corpora::ParallelDataset& dataset) {
  std::vector<EmbeddedPair> pairs;
  std::vector<std::string> bad;
  for (const auto& ex : dataset.examples) {
    if (ex.clean.size() != ex.corrupted.size()) {
      bad.push_back(ex.id);
      continue;
    }
    pairs.push_back({model::embed(model, ex.clean.ids), model::embed(model, ex.corrupted.ids),
                     ex.label});
  }
  if (!bad.empty()) {
    std::string msg = "token counts differ for:";
    for (const auto& id : bad) msg += " " + id;
    throw AlignmentError(msg);
  }
  return pairs;
}

EdgeScores score_edges(const model::TransformerModel& model,
                       const corpora::ParallelDataset& dataset, const EapConfig& config,
                       int jobs) {
  const graph::ComputationGraph g(model.layout());
  const auto pairs = embed_pairs(model, dataset);
  EdgeScores out;
  out.layout = model.layout();
  out.config = config;
  out.scores = score_pairs(model, g, pairs, config, jobs);
  out.dataset_fingerprint = corpora::fingerprint(dataset);
  out.model_hash = model::checkpoint_hash(model);
  out.n_examples = static_cast<int>(pairs.size());
  return out;
}

}  // namespace mc::circuits
