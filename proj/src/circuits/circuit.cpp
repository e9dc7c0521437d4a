// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/circuits/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "mc/error.hpp"
#include "mc/hash.hpp"
#include "mc/parallel.hpp"

namespace mc::circuits {

namespace {

nlohmann::json edge_json(const graph::Edge& e) { return {e.src.label(), e.dst.label()}; }

nlohmann::json nodes_json(const std::vector<graph::NodeId>& nodes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& n : nodes) out.push_back(n.label());
  return out;
}

nlohmann::json edges_json(const std::vector<graph::Edge>& edges) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : edges) out.push_back(edge_json(e));
  return out;
}

void check_aligned(const corpora::ParallelDataset& dataset) {
  std::string bad;
  for (const auto& ex : dataset.examples) {
    if (ex.clean.size() != ex.corrupted.size()) bad += " " + ex.id;
  }
  if (!bad.empty()) throw AlignmentError("token counts differ for:" + bad);
}

template <class T>
void partition(const std::set<T>& a, const std::set<T>& b, std::vector<T>& shared,
               std::vector<T>& removed, std::vector<T>& added) {
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(removed));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(added));
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

std::vector<graph::NodeId> Circuit::nodes() const {
  std::set<graph::NodeId> s;
  for (const auto& e : edges) {
    s.insert(e.src);
    s.insert(e.dst);
  }
  return {s.begin(), s.end()};
}

nlohmann::json Circuit::to_json() const {
  const graph::ComputationGraph g(layout);
  return {{"graph_hash", g.config_hash()},
          {"layers", layout.n_layers},
          {"heads", layout.n_heads},
          {"size", size},
          {"method", circuits::to_string(method)},
          {"ig_steps", ig_steps},
          {"edges", edges_json(edges)},
          {"scores", scores}};
}

Circuit Circuit::from_json(const nlohmann::json& j) {
  Circuit c;
  try {
    c.layout = {j.at("layers").get<int>(), j.at("heads").get<int>()};
    const graph::ComputationGraph g(c.layout);
    if (j.contains("graph_hash") && j.at("graph_hash").get<std::string>() != g.config_hash()) {
      throw GraphMismatch("circuit graph hash does not match its layout");
    }
    c.size = j.at("size").get<int>();
    c.method = eap_method_from_string(j.at("method").get<std::string>());
    c.ig_steps = j.at("ig_steps").get<int>();
    for (const auto& e : j.at("edges")) {
      graph::Edge edge{graph::NodeId::parse(e.at(0).get<std::string>()),
                       graph::NodeId::parse(e.at(1).get<std::string>())};
      if (!g.find(edge)) throw GraphMismatch("edge " + edge.label() + " is not in the graph");
      c.edges.push_back(edge);
    }
    c.scores = j.at("scores").get<std::vector<double>>();
    if (c.scores.size() != c.edges.size()) throw ParseError("circuit: scores and edges differ");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("circuit: ") + e.what());
  }
  return c;
}

void save_circuit(const Circuit& c, const std::filesystem::path& path) {
  write_file(path, c.to_json().dump(2) + "\n");
}

Circuit load_circuit(const std::filesystem::path& path) {
  try {
    return Circuit::from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Circuit extract_circuit(const EdgeScores& scores, int n, Ranking ranking) {
  const graph::ComputationGraph g(scores.layout);
  if (static_cast<int>(scores.scores.size()) != g.edge_count()) {
    throw GraphMismatch("score vector does not match the graph");
  }
  std::vector<int> order(g.edge_count());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int e) {
    return ranking == Ranking::Absolute ? std::abs(scores.scores[e]) : scores.scores[e];
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (key(a) != key(b)) return key(a) > key(b);
    return g.edges()[a] < g.edges()[b];
  });
  Circuit c;
  c.layout = scores.layout;
  c.size = n;
  c.method = scores.config.method;
  c.ig_steps = scores.config.effective_steps();
  const int take = std::clamp(n, 0, g.edge_count());
  for (int i = 0; i < take; ++i) {
    c.edges.push_back(g.edges()[order[i]]);
    c.scores.push_back(scores.scores[order[i]]);
  }
  return c;
}

nlohmann::json FaithfulnessReport::to_json() const {
  nlohmann::json ex = nlohmann::json::array();
  for (const auto& e : examples) {
    ex.push_back({{"id", e.id},
                  {"baseline", e.baseline},
                  {"circuit", e.circuit},
                  {"corrupted", e.corrupted},
                  {"baseline_correct", e.baseline_correct},
                  {"circuit_correct", e.circuit_correct}});
  }
  return {{"size", size},
          {"n", n},
          {"baseline", baseline},
          {"circuit", circuit},
          {"corrupted", corrupted},
          {"baseline_accuracy", baseline_accuracy},
          {"circuit_accuracy", circuit_accuracy},
          {"corrupted_accuracy", corrupted_accuracy},
          {"examples", ex}};
}

FaithfulnessReport evaluate_circuit(const model::TransformerModel& model, const Circuit& circuit,
                                    const corpora::ParallelDataset& dataset, int jobs) {
  const graph::ComputationGraph g(model.layout());
  if (circuit.layout.n_layers != g.layout().n_layers ||
      circuit.layout.n_heads != g.layout().n_heads) {
    throw GraphMismatch("circuit was extracted from a different architecture");
  }
  check_aligned(dataset);
  const auto plan = graph::PatchPlan::from_edges(g, circuit.edges);
  FaithfulnessReport r;
  r.size = circuit.size;
  r.n = static_cast<int>(dataset.examples.size());
  r.examples.resize(dataset.examples.size());
  std::vector<int> corrupted_correct(dataset.examples.size(), 0);
  parallel_for(dataset.examples.size(), jobs, [&](std::size_t i) {
    const auto& ex = dataset.examples[i];
    const auto clean_input = model::embed(model, ex.clean.ids);
    const auto base = model::forward(model, clean_input);
    const auto corrupted = model::forward_with_cache(model, ex.corrupted.ids);
    const auto patched = graph::patched_forward(model, clean_input, corrupted, plan);
    auto& out = r.examples[i];
    out.id = ex.id;
    out.baseline = base.probs(ex.label);
    out.circuit = patched.probs(ex.label);
    out.corrupted = corrupted.prediction.probs(ex.label);
    out.baseline_correct = base.label() == ex.label;
    out.circuit_correct = patched.label() == ex.label;
    corrupted_correct[i] = corrupted.prediction.label() == ex.label;
  });
  if (r.n == 0) return r;
  for (std::size_t i = 0; i < r.examples.size(); ++i) {
    const auto& e = r.examples[i];
    r.baseline += e.baseline;
    r.circuit += e.circuit;
    r.corrupted += e.corrupted;
    r.baseline_accuracy += e.baseline_correct;
    r.circuit_accuracy += e.circuit_correct;
    r.corrupted_accuracy += corrupted_correct[i];
  }
  const double n = r.n;
  r.baseline /= n;
  r.circuit /= n;
  r.corrupted /= n;
  r.baseline_accuracy /= n;
  r.circuit_accuracy /= n;
  r.corrupted_accuracy /= n;
  return r;
}

nlohmann::json RobustnessReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    out.push_back({{"method", row.method},
                   {"size", row.size},
                   {"n", row.n},
                   {"skipped", row.skipped},
                   {"accuracy", row.accuracy}});
  }
  return {{"rows", out}};
}

RobustnessReport evaluate_circuit_on_attacks(const model::TransformerModel& model,
                                             std::span<const Circuit> circuits,
                                             std::span<const attacks::AttackOutcome> outcomes,
                                             int jobs) {
  RobustnessReport report;
  const graph::ComputationGraph g(model.layout());
  std::vector<graph::PatchPlan> plans;
  for (const auto& c : circuits) plans.push_back(graph::PatchPlan::from_edges(g, c.edges));

  std::vector<std::string> methods;
  std::map<std::string, std::vector<const attacks::AttackOutcome*>> by_method;
  for (const auto& o : outcomes) {
    if (o.skipped) continue;
    const std::string m = attacks::short_name(o.method);
    if (!by_method.count(m)) methods.push_back(m);
    by_method[m].push_back(&o);
  }

  for (const auto& m : methods) {
    const auto& group = by_method[m];
    std::vector<const attacks::AttackOutcome*> aligned;
    int skipped = 0;
    for (const auto* o : group) {
      if (o->original.size() == o->adversarial.size()) {
        aligned.push_back(o);
      } else {
        ++skipped;
      }
    }
    // correct[i][c]: example i, circuit c.
    std::vector<std::vector<int>> correct(aligned.size(), std::vector<int>(circuits.size(), 0));
    parallel_for(aligned.size(), jobs, [&](std::size_t i) {
      const auto* o = aligned[i];
      const auto corrupted = model::forward_with_cache(model, o->original.ids);
      const auto input = model::embed(model, o->adversarial.ids);
      for (std::size_t c = 0; c < circuits.size(); ++c) {
        correct[i][c] = graph::patched_forward(model, input, corrupted, plans[c]).label() == o->label;
      }
    });
    double sum = 0.0;
    for (std::size_t c = 0; c < circuits.size(); ++c) {
      RobustnessRow row{m, std::to_string(circuits[c].size), static_cast<int>(aligned.size()),
                        skipped, 0.0};
      for (const auto& r : correct) row.accuracy += r[c];
      if (row.n > 0) row.accuracy /= row.n;
      sum += row.accuracy;
      report.rows.push_back(row);
    }
    report.rows.push_back({m, "mean", static_cast<int>(aligned.size()), skipped,
                           circuits.empty() ? 0.0 : sum / static_cast<double>(circuits.size())});
  }
  return report;
}

nlohmann::json CircuitDiff::to_json() const {
  return {{"shared_nodes", nodes_json(shared_nodes)},
          {"removed_nodes", nodes_json(removed_nodes)},
          {"added_nodes", nodes_json(added_nodes)},
          {"shared_edges", edges_json(shared_edges)},
          {"removed_edges", edges_json(removed_edges)},
          {"added_edges", edges_json(added_edges)}};
}

std::string CircuitDiff::to_dot() const {
  std::string out = "digraph circuit_diff {\n  rankdir=BT;\n";
  auto node = [&](const graph::NodeId& n, const char* attrs) {
    out += "  " + quoted(n.label()) + " [" + attrs + "];\n";
  };
  for (const auto& n : shared_nodes) node(n, "shape=box");
  for (const auto& n : removed_nodes) node(n, "shape=ellipse, style=dashed");
  for (const auto& n : added_nodes) node(n, "shape=triangle");
  auto edge = [&](const graph::Edge& e, const char* attrs) {
    out += "  " + quoted(e.src.label()) + " -> " + quoted(e.dst.label()) + " [" + attrs + "];\n";
  };
  for (const auto& e : shared_edges) edge(e, "style=solid");
  for (const auto& e : removed_edges) edge(e, "style=dashed");
  for (const auto& e : added_edges) edge(e, "style=bold");
  out += "}\n";
  return out;
}

CircuitDiff diff_circuits(const Circuit& base, const Circuit& overlay) {
  if (base.layout.n_layers != overlay.layout.n_layers ||
      base.layout.n_heads != overlay.layout.n_heads) {
    throw GraphMismatch("circuits come from different architectures");
  }
  CircuitDiff d;
  const auto bn = base.nodes();
  const auto on = overlay.nodes();
  partition(std::set<graph::NodeId>(bn.begin(), bn.end()),
            std::set<graph::NodeId>(on.begin(), on.end()), d.shared_nodes, d.removed_nodes,
            d.added_nodes);
  partition(std::set<graph::Edge>(base.edges.begin(), base.edges.end()),
            std::set<graph::Edge>(overlay.edges.begin(), overlay.edges.end()), d.shared_edges,
            d.removed_edges, d.added_edges);
  return d;
}

}  // namespace mc::circuits
