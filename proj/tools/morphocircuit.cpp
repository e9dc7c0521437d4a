// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Exit codes: 0 success, 1 stage or runtime failure,
// 2 invalid input.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mc/attacks/attack.hpp"
#include "mc/circuits/circuit.hpp"
#include "mc/circuits/eap.hpp"
#include "mc/corpora/minilang.hpp"
#include "mc/corpora/parallel.hpp"
#include "mc/error.hpp"
#include "mc/graph/graph.hpp"
#include "mc/harness/pipeline.hpp"
#include "mc/harness/reports.hpp"
#include "mc/hash.hpp"
#include "mc/model/checkpoint.hpp"
#include "mc/model/training.hpp"
#include "mc/random.hpp"
#include "mc/similarity/nli.hpp"
#include "mc/similarity/report.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out_dir;
  std::string vocab;
};

mc::text::Vocabulary need_vocab(const Globals& g) {
  if (g.vocab.empty()) throw mc::InputError("--vocab is required");
  return mc::text::Vocabulary::load(g.vocab);
}

// Relative output paths land under --out-dir when it is given.
fs::path out_path(const Globals& g, const std::string& p) {
  if (g.out_dir.empty() || fs::path(p).is_absolute()) return p;
  return fs::path(g.out_dir) / p;
}

// Writes to `path`, or stdout when it is empty.
void emit(const Globals& g, const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
  } else {
    mc::write_file(out_path(g, path), content);
  }
}

std::unique_ptr<mc::similarity::NliProvider> nli_from_flags(const std::string& endpoint,
                                                            bool mock) {
  if (!endpoint.empty()) return std::make_unique<mc::similarity::HttpNliProvider>(endpoint);
  if (mock) return std::make_unique<mc::similarity::MockNliProvider>();
  if (auto ep = mc::similarity::HttpNliProvider::endpoint_from_env()) {
    return std::make_unique<mc::similarity::HttpNliProvider>(*ep);
  }
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial attacks and circuit discovery on a toy transformer"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--vocab", g.vocab, "Vocabulary JSON");
  std::function<void()> action;

  // train
  auto* train = app.add_subcommand("train", "Train a classifier checkpoint");
  std::string train_corpus, train_heldout, train_out, train_encoder, train_report;
  mc::model::TrainingSchedule sched;
  mc::model::ModelConfig mcfg;
  std::optional<double> train_lr;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--corpus", train_corpus, "Training corpus JSONL")->required();
  train->add_option("--heldout", train_heldout, "Held-out corpus JSONL");
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--encoder-out", train_encoder, "Save the masked-LM snapshot here");
  train->add_option("--report", train_report, "Training report JSON");
  train->add_option("--mlm-epochs", sched.mlm_epochs);
  train->add_option("--cls-epochs", sched.cls_epochs);
  train->add_option("--lr", train_lr, "Classifier learning rate");
  train->add_option("--mlm-lr", sched.mlm_learning_rate);
  train->add_option("--layers", mcfg.n_layers);
  train->add_option("--heads", mcfg.n_heads);
  train->add_option("--seed", train_seed);
  train->callback([&] {
    action = [&] {
      const auto vocab = need_vocab(g);
      const auto seed = train_seed ? train_seed : g.seed;
      const auto corpus = mc::corpora::to_examples(mc::corpora::load_corpus_jsonl(train_corpus), vocab);
      std::vector<mc::model::LabeledExample> held;
      if (!train_heldout.empty()) {
        held = mc::corpora::to_examples(mc::corpora::load_corpus_jsonl(train_heldout), vocab);
      }
      if (train_lr) sched.cls_learning_rate = *train_lr;
      mcfg.vocab_size = vocab.size();
      if (seed) {
        mcfg.seed = mc::mix_seed(*seed, 3);
        sched.seed = mc::mix_seed(*seed, 4);
      }
      mc::model::TransformerModel m(mcfg);
      const auto report = mc::model::train(m, corpus, held, sched);
      mc::model::save_checkpoint(m, out_path(g, train_out));
      if (!train_encoder.empty()) {
        mc::model::save_checkpoint(mc::model::TransformerModel(mcfg, *report.encoder),
                                   out_path(g, train_encoder));
      }
      nlohmann::json j = report;
      if (!train_report.empty()) emit(g, train_report, j.dump(2) + "\n");
      std::cerr << "heldout accuracy " << report.heldout_accuracy << "\n";
    };
  });

  // graph export
  auto* graph = app.add_subcommand("graph", "Computation graph tools");
  graph->require_subcommand(1);
  auto* gexport = graph->add_subcommand("export", "Export the node/edge graph");
  std::string g_ckpt, g_format = "json", g_out;
  gexport->add_option("--ckpt", g_ckpt)->required();
  gexport->add_option("--format", g_format)->check(CLI::IsMember({"dot", "json"}));
  gexport->add_option("--out", g_out);
  gexport->callback([&] {
    action = [&] {
      const auto m = mc::model::load_checkpoint(g_ckpt);
      const auto graph = mc::graph::build_graph(m.config());
      emit(g, g_out, g_format == "dot" ? graph.to_dot() : graph.to_json().dump(2) + "\n");
    };
  });

  // eap score
  auto* eap = app.add_subcommand("eap", "Edge attribution patching");
  eap->require_subcommand(1);
  auto* eap_score = eap->add_subcommand("score", "Score every edge over a parallel dataset");
  std::string e_ckpt, e_dataset, e_method = "eap-ig", e_metric = "class-prob", e_out;
  int e_steps = 8;
  eap_score->add_option("--ckpt", e_ckpt)->required();
  eap_score->add_option("--dataset", e_dataset)->required();
  eap_score->add_option("--method", e_method)->check(CLI::IsMember({"eap", "eap-ig"}));
  eap_score->add_option("--steps", e_steps);
  eap_score->add_option("--metric", e_metric);
  eap_score->add_option("--out", e_out)->required();
  eap_score->callback([&] {
    action = [&] {
      const auto vocab = need_vocab(g);
      const auto m = mc::model::load_checkpoint(e_ckpt);
      const auto ds = mc::corpora::load_parallel_jsonl(e_dataset, vocab);
      mc::circuits::EapConfig cfg;
      cfg.method = mc::circuits::eap_method_from_string(e_method);
      cfg.ig_steps = e_steps;
      cfg.metric = mc::circuits::metric_from_string(e_metric);
      mc::circuits::save_scores(mc::circuits::score_edges(m, ds, cfg, g.jobs), out_path(g, e_out));
    };
  });

  // circuit extract / eval / diff
  auto* circuit = app.add_subcommand("circuit", "Circuit extraction and evaluation");
  circuit->require_subcommand(1);
  auto* extract = circuit->add_subcommand("extract", "Top-N edges by absolute score");
  std::string x_scores, x_out;
  int x_size = 50;
  extract->add_option("--scores", x_scores)->required();
  extract->add_option("--size", x_size)->required()->check(CLI::PositiveNumber);
  extract->add_option("--out", x_out)->required();
  extract->callback([&] {
    action = [&] {
      mc::circuits::save_circuit(mc::circuits::extract_circuit(mc::circuits::load_scores(x_scores), x_size),
                                 out_path(g, x_out));
    };
  });
  auto* ceval = circuit->add_subcommand("eval", "Faithfulness of a circuit");
  std::string v_ckpt, v_circuit, v_dataset, v_out;
  ceval->add_option("--ckpt", v_ckpt)->required();
  ceval->add_option("--circuit", v_circuit)->required();
  ceval->add_option("--dataset", v_dataset)->required();
  ceval->add_option("--out", v_out);
  ceval->callback([&] {
    action = [&] {
      const auto vocab = need_vocab(g);
      const auto m = mc::model::load_checkpoint(v_ckpt);
      const auto report = mc::circuits::evaluate_circuit(
          m, mc::circuits::load_circuit(v_circuit), mc::corpora::load_parallel_jsonl(v_dataset, vocab),
          g.jobs);
      emit(g, v_out, report.to_json().dump(2) + "\n");
    };
  });
  auto* cdiff = circuit->add_subcommand("diff", "Shared, removed and added components");
  std::string d_base, d_overlay, d_format = "json", d_out;
  cdiff->add_option("--base", d_base)->required();
  cdiff->add_option("--overlay", d_overlay)->required();
  cdiff->add_option("--format", d_format)->check(CLI::IsMember({"dot", "json"}));
  cdiff->add_option("--out", d_out);
  cdiff->callback([&] {
    action = [&] {
      const auto d = mc::circuits::diff_circuits(mc::circuits::load_circuit(d_base),
                                                 mc::circuits::load_circuit(d_overlay));
      emit(g, d_out, d_format == "dot" ? d.to_dot() : d.to_json().dump(2) + "\n");
    };
  });

  // attack
  auto* attack = app.add_subcommand("attack", "Run a word-level attack");
  std::string a_ckpt, a_encoder, a_dataset, a_method = "tf", a_importance = "mask", a_lexicon,
                      a_out, a_report;
  double a_threshold = 0.9, a_budget = 0.3;
  int a_k = 8, a_limit = 0;
  std::optional<std::uint64_t> a_seed;
  attack->add_option("--ckpt", a_ckpt)->required();
  attack->add_option("--encoder", a_encoder, "Sentence encoder checkpoint (default: --ckpt)");
  attack->add_option("--dataset", a_dataset, "Corpus JSONL {id,text,label}")->required();
  attack->add_option("--method", a_method)->check(CLI::IsMember({"tb", "tf", "wntf", "ba"}));
  attack->add_option("--importance", a_importance)
      ->check(CLI::IsMember({"mask", "jacobian", "shapley"}));
  attack->add_option("--threshold", a_threshold);
  attack->add_option("--budget", a_budget);
  attack->add_option("--k", a_k);
  attack->add_option("--seed", a_seed);
  attack->add_option("--lexicon", a_lexicon, "Minilang lexicon JSON (needed for wntf)");
  attack->add_option("--limit", a_limit, "Attack only the first N sentences");
  attack->add_option("--out", a_out)->required();
  attack->add_option("--report", a_report, "Summary table (CSV or JSON by extension)");
  attack->callback([&] {
    action = [&] {
      const auto vocab = need_vocab(g);
      const auto m = mc::model::load_checkpoint(a_ckpt);
      const auto enc = a_encoder.empty() ? m : mc::model::load_checkpoint(a_encoder);
      const mc::similarity::ModelSimilarity sim(enc, vocab);
      std::optional<mc::attacks::SynonymLexicon> lex;
      if (!a_lexicon.empty()) {
        lex = mc::corpora::MiniLexicon::from_json(nlohmann::json::parse(mc::read_file(a_lexicon)))
                  .synonym_lexicon();
      }
      std::vector<mc::attacks::LabeledText> test;
      for (const auto& s : mc::corpora::load_corpus_jsonl(a_dataset)) {
        if (a_limit > 0 && static_cast<int>(test.size()) >= a_limit) break;
        test.push_back({std::to_string(s.id), s.text, s.label});
      }
      mc::attacks::AttackConfig cfg;
      cfg.method = mc::attacks::attack_method_from_string(a_method);
      cfg.importance = mc::attacks::importance_from_string(a_importance);
      cfg.filter_threshold = a_threshold;
      cfg.max_perturb_fraction = a_budget;
      cfg.candidates_per_word = a_k;
      cfg.seed = a_seed.value_or(g.seed.value_or(0));
      const mc::attacks::AttackResources res{m, vocab, sim, lex ? &*lex : nullptr};
      const std::vector<mc::attacks::AttackConfig> configs{cfg};
      const auto report = mc::attacks::evaluate_attacks(res, test, configs, g.jobs);
      emit(g, a_out, mc::attacks::outcomes_to_jsonl(report.outcomes));
      if (!a_report.empty()) {
        const auto t = mc::harness::attack_table(report, fs::path(a_dataset).stem().string());
        const auto fmt = fs::path(a_report).extension() == ".csv" ? mc::harness::Format::Csv
                                                                  : mc::harness::Format::Json;
        emit(g, a_report, t.render(fmt));
      }
    };
  });

  // similarity-report
  auto* simrep = app.add_subcommand("similarity-report", "ROUGE, NLI and semantic similarity");
  std::string s_outcomes, s_ckpt, s_endpoint, s_out, s_format = "json", s_dataset = "dataset";
  bool s_mock = false;
  simrep->add_option("--outcomes", s_outcomes)->required();
  simrep->add_option("--ckpt", s_ckpt, "Sentence encoder checkpoint")->required();
  simrep->add_option("--nli-endpoint", s_endpoint, "http://host:port of an NLI service");
  simrep->add_flag("--nli-mock", s_mock, "Use the built-in ROUGE-based NLI stand-in");
  simrep->add_option("--dataset-name", s_dataset);
  simrep->add_option("--format", s_format)->check(CLI::IsMember({"json", "csv", "full"}));
  simrep->add_option("--out", s_out);
  simrep->callback([&] {
    action = [&] {
      const auto vocab = need_vocab(g);
      const auto enc = mc::model::load_checkpoint(s_ckpt);
      const mc::similarity::ModelSimilarity sim(enc, vocab);
      const auto outcomes = mc::attacks::load_outcomes_jsonl(s_outcomes, vocab);
      const auto nli = nli_from_flags(s_endpoint, s_mock);
      const auto report = mc::similarity::similarity_report(outcomes, sim, nli.get(), s_dataset, g.jobs);
      if (s_format == "full") {
        emit(g, s_out, report.to_json().dump(2) + "\n");
      } else {
        emit(g, s_out, mc::harness::similarity_table(report, nli != nullptr)
                           .render(mc::harness::format_from_string(s_format)));
      }
    };
  });

  // minilang-gen
  auto* gen = app.add_subcommand("minilang-gen", "Generate a synthetic inflected corpus");
  std::string m_config, m_corpus, m_lexicon, m_vocab;
  int m_n = 2000;
  gen->add_option("--config", m_config, "Generator config JSON (default built-in)");
  gen->add_option("--n", m_n, "Number of sentences");
  gen->add_option("--out-corpus", m_corpus)->required();
  gen->add_option("--out-lexicon", m_lexicon)->required();
  gen->add_option("--out-vocab", m_vocab);
  gen->callback([&] {
    action = [&] {
      const auto cfg = m_config.empty() ? mc::corpora::MinilangConfig::defaults()
                                        : mc::corpora::load_minilang_config(m_config);
      const auto lang = mc::corpora::generate_minilang(cfg, m_n, g.seed.value_or(cfg.seed));
      mc::corpora::save_corpus_jsonl(lang.corpus, out_path(g, m_corpus));
      emit(g, m_lexicon, lang.lexicon.to_json().dump(2) + "\n");
      if (!m_vocab.empty()) lang.vocab.save(out_path(g, m_vocab));
    };
  });

  // parallel build / filter
  auto* par = app.add_subcommand("parallel", "Clean/corrupted parallel datasets");
  par->require_subcommand(1);
  auto* pbuild = par->add_subcommand("build", "Build a parallel dataset from a corpus");
  std::string p_variant = "syncretic", p_corpus, p_lexicon, p_out;
  pbuild->add_option("--variant", p_variant)
      ->check(CLI::IsMember({"syncretic", "inflectional", "plain"}));
  pbuild->add_option("--corpus", p_corpus)->required();
  pbuild->add_option("--lexicon", p_lexicon)->required();
  pbuild->add_option("--out", p_out)->required();
  pbuild->callback([&] {
    action = [&] {
      const auto vocab = need_vocab(g);
      const auto lex = mc::corpora::MiniLexicon::from_json(nlohmann::json::parse(mc::read_file(p_lexicon)));
      const auto ds = mc::corpora::build_parallel(mc::corpora::load_corpus_jsonl(p_corpus), lex, vocab,
                                                  mc::corpora::variant_from_string(p_variant),
                                                  g.seed.value_or(0));
      mc::corpora::save_parallel_jsonl(ds, out_path(g, p_out));
      std::cerr << ds.examples.size() << " pairs, " << ds.skipped << " sentences skipped\n";
    };
  });
  auto* pfilter = par->add_subcommand("filter", "Keep pairs whose prediction changes");
  std::string f_ckpt, f_dataset, f_out;
  pfilter->add_option("--ckpt", f_ckpt)->required();
  pfilter->add_option("--dataset", f_dataset)->required();
  pfilter->add_option("--out", f_out)->required();
  pfilter->callback([&] {
    action = [&] {
      const auto vocab = need_vocab(g);
      const auto r = mc::corpora::filter_prediction_changed(
          mc::model::load_checkpoint(f_ckpt), mc::corpora::load_parallel_jsonl(f_dataset, vocab));
      mc::corpora::save_parallel_jsonl(r.dataset, out_path(g, f_out));
      std::cerr << "retention " << r.retention << "\n";
    };
  });

  // pipeline run
  auto* pipe = app.add_subcommand("pipeline", "End-to-end experiment");
  pipe->require_subcommand(1);
  auto* prun = pipe->add_subcommand("run", "Run every stage of a manifest");
  std::string r_manifest;
  prun->add_option("--manifest", r_manifest, "Manifest JSON (default: built-in reference)");
  prun->callback([&] {
    action = [&] {
      const auto manifest = r_manifest.empty() ? mc::harness::Manifest::reference()
                                               : mc::harness::Manifest::load(r_manifest);
      mc::harness::PipelineOptions opts;
      opts.out_dir = g.out_dir.empty() ? "out" : g.out_dir;
      opts.jobs = g.jobs;
      opts.seed = g.seed;
      const auto summary = mc::harness::run_pipeline(manifest, opts);
      for (const auto& s : summary.stages) {
        std::cerr << s.name << (s.skipped ? " skipped" : " ran") << " (" << s.seconds << " s)\n";
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (action) action();
  } catch (const mc::StageFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const mc::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
