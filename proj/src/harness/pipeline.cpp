// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/harness/pipeline.hpp"

#include <chrono>
#include <functional>

#include "mc/circuits/circuit.hpp"
#include "mc/corpora/minilang.hpp"
#include "mc/corpora/parallel.hpp"
#include "mc/error.hpp"
#include "mc/harness/reports.hpp"
#include "mc/hash.hpp"
#include "mc/model/checkpoint.hpp"
#include "mc/similarity/report.hpp"

namespace mc::harness {

namespace fs = std::filesystem;

namespace {

// Salts for deriving per-purpose seeds from the global seed.
enum Salt : std::uint64_t {
  kGenerateSalt = 1,
  kHeldoutSalt = 2,
  kInitSalt = 3,
  kTrainSalt = 4,
  kAttackSalt = 5,
  kParallelSalt = 6,
};

const std::vector<std::string> kVariants = {"syncretic", "inflectional", "plain"};

constexpr const char* kTrainCorpus = "corpus/train.jsonl";
constexpr const char* kHeldout = "corpus/heldout.jsonl";
constexpr const char* kLexicon = "corpus/lexicon.json";
constexpr const char* kVocab = "corpus/vocab.json";
constexpr const char* kClassifier = "model/classifier.ckpt";
constexpr const char* kEncoder = "model/encoder.ckpt";
constexpr const char* kTrainingReport = "model/training.json";
constexpr const char* kOutcomes = "attacks/outcomes.jsonl";
constexpr const char* kRetention = "parallel/retention.json";
constexpr const char* kStateFile = "pipeline_state.json";
constexpr const char* kDataset = "minilang";

std::string parallel_path(const std::string& v) { return "parallel/" + v + ".jsonl"; }
std::string filtered_path(const std::string& v) { return "parallel/" + v + ".filtered.jsonl"; }
std::string scores_path(const std::string& v) { return "scores/" + v + ".json"; }
std::string circuit_path(const std::string& v, int n) {
  return "circuits/" + v + "_" + std::to_string(n) + ".json";
}

std::vector<std::string> with_formats(const std::string& stem) {
  return {stem + ".csv", stem + ".json"};
}

void emit_both(const Table& t, const fs::path& out, const std::string& stem) {
  t.emit(out / (stem + ".csv"), Format::Csv);
  t.emit(out / (stem + ".json"), Format::Json);
}

struct Stage {
  std::string name;
  std::vector<std::string> inputs;   // relative to out_dir, or absolute
  std::vector<std::string> outputs;  // relative to out_dir
  nlohmann::json params;
  std::function<void()> run;
};

class Runner {
 public:
  explicit Runner(fs::path out) : out_(std::move(out)) {
    const fs::path state = out_ / kStateFile;
    if (fs::exists(state)) {
      try {
        state_ = nlohmann::json::parse(read_file(state));
      } catch (const nlohmann::json::exception&) {
        state_ = nlohmann::json::object();
      }
    }
    if (!state_.is_object()) state_ = nlohmann::json::object();
  }

  StageRecord run(const Stage& s) {
    const auto start = std::chrono::steady_clock::now();
    StageRecord rec{s.name, false, 0.0};
    std::string key_material = s.name + "\n" + kToolVersion + "\n" + s.params.dump() + "\n";
    for (const auto& in : s.inputs) {
      const fs::path p = resolve(in);
      if (!fs::exists(p)) throw StageFailed(s.name, "missing input " + p.string());
      key_material += in + "=" + sha256_file(p) + "\n";
    }
    const std::string key = sha256_hex(key_material);
    if (up_to_date(s, key)) {
      rec.skipped = true;
    } else {
      try {
        s.run();
      } catch (const StageFailed&) {
        throw;
      } catch (const std::exception& e) {
        throw StageFailed(s.name, e.what());
      }
      nlohmann::json outputs = nlohmann::json::object();
      for (const auto& o : s.outputs) {
        if (!fs::exists(out_ / o)) throw StageFailed(s.name, "did not produce " + o);
        outputs[o] = sha256_file(out_ / o);
      }
      state_[s.name] = {{"key", key}, {"outputs", outputs}};
      write_file(out_ / kStateFile, state_.dump(2) + "\n");
    }
    for (const auto& o : s.outputs) artifacts_[o] = sha256_file(out_ / o);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
  }

  const std::map<std::string, std::string>& artifacts() const { return artifacts_; }

 private:
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : out_ / path;
  }

  bool up_to_date(const Stage& s, const std::string& key) const {
    if (!state_.contains(s.name)) return false;
    const auto& entry = state_.at(s.name);
    if (entry.value("key", std::string()) != key) return false;
    const auto& outputs = entry.at("outputs");
    for (const auto& o : s.outputs) {
      if (!outputs.contains(o) || !fs::exists(out_ / o)) return false;
      if (outputs.at(o).get<std::string>() != sha256_file(out_ / o)) return false;
    }
    return true;
  }

  fs::path out_;
  nlohmann::json state_ = nlohmann::json::object();
  std::map<std::string, std::string> artifacts_;
};

std::unique_ptr<similarity::NliProvider> make_nli(const std::string& mode) {
  if (mode == "none") return nullptr;
  if (mode == "mock") return std::make_unique<similarity::MockNliProvider>();
  if (mode == "env") {
    auto ep = similarity::HttpNliProvider::endpoint_from_env();
    if (!ep) return nullptr;
    return std::make_unique<similarity::HttpNliProvider>(*ep);
  }
  return std::make_unique<similarity::HttpNliProvider>(mode);
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"generate", "train",   "attack",
                                                 "similarity", "parallel", "eap",
                                                 "extract",  "eval",    "diff"};
  return names;
}

Manifest Manifest::reference() {
  Manifest m;
  m.circuit_sizes.assign(circuits::kCircuitSizes.begin(), circuits::kCircuitSizes.end());
  return m;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json methods = nlohmann::json::array();
  for (auto a : attack.methods) methods.push_back(attacks::short_name(a));
  nlohmann::json j{{"seed", seed},
                   {"tool_version", tool_version},
                   {"train_size", train_size},
                   {"heldout_size", heldout_size},
                   {"model", model},
                   {"training", training},
                   {"attack",
                    {{"test_size", attack.test_size},
                     {"methods", methods},
                     {"importance", attacks::to_string(attack.importance)},
                     {"threshold", attack.threshold},
                     {"budget", attack.budget},
                     {"k", attack.k},
                     {"nli", attack.nli}}},
                   {"eap",
                    {{"method", circuits::to_string(eap.method)},
                     {"ig_steps", eap.ig_steps},
                     {"metric", circuits::to_string(eap.metric)}}},
                   {"circuit_sizes", circuit_sizes},
                   {"diff_size", diff_size},
                   {"pins", pins}};
  if (generator_config) j["generator_config"] = generator_config->string();
  return j;
}

Manifest Manifest::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  Manifest m = reference();
  m.base_dir = base_dir;
  try {
    m.seed = j.value("seed", m.seed);
    m.tool_version = j.value("tool_version", m.tool_version);
    if (j.contains("generator_config")) {
      fs::path p = j.at("generator_config").get<std::string>();
      m.generator_config = p.is_absolute() ? p : base_dir / p;
    }
    m.train_size = j.value("train_size", m.train_size);
    m.heldout_size = j.value("heldout_size", m.heldout_size);
    if (j.contains("model")) m.model = j.at("model").get<model::ModelConfig>();
    if (j.contains("training")) m.training = j.at("training").get<model::TrainingSchedule>();
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      m.attack.test_size = a.value("test_size", m.attack.test_size);
      if (a.contains("methods")) {
        m.attack.methods.clear();
        for (const auto& s : a.at("methods")) {
          m.attack.methods.push_back(attacks::attack_method_from_string(s.get<std::string>()));
        }
      }
      m.attack.importance =
          attacks::importance_from_string(a.value("importance", std::string("mask")));
      m.attack.threshold = a.value("threshold", m.attack.threshold);
      m.attack.budget = a.value("budget", m.attack.budget);
      m.attack.k = a.value("k", m.attack.k);
      m.attack.nli = a.value("nli", m.attack.nli);
    }
    if (j.contains("eap")) {
      const auto& e = j.at("eap");
      m.eap.method = circuits::eap_method_from_string(e.value("method", std::string("eap-ig")));
      m.eap.ig_steps = e.value("ig_steps", m.eap.ig_steps);
      m.eap.metric = circuits::metric_from_string(e.value("metric", std::string("class-prob")));
    }
    if (j.contains("circuit_sizes")) m.circuit_sizes = j.at("circuit_sizes").get<std::vector<int>>();
    m.diff_size = j.value("diff_size", m.diff_size);
    if (j.contains("pins")) m.pins = j.at("pins").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (m.train_size < 1 || m.heldout_size < 1) throw ParseError("manifest: empty corpus sizes");
  if (m.attack.test_size > m.heldout_size) {
    throw ParseError("manifest: attack.test_size exceeds heldout_size");
  }
  m.eap.validate();
  return m;
}

Manifest Manifest::load(const fs::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)), path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json PipelineSummary::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : stages) {
    st.push_back({{"name", s.name}, {"skipped", s.skipped}, {"seconds", s.seconds}});
  }
  return {{"stages", st}, {"artifacts", artifacts}};
}

PipelineSummary run_pipeline(const Manifest& manifest, const PipelineOptions& options) {
  for (const auto& [rel, expected] : manifest.pins) {
    const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : manifest.base_dir / rel;
    if (!fs::exists(p)) throw HashMismatch("pinned input " + p.string() + " is missing");
    const std::string actual = sha256_file(p);
    if (actual != expected) {
      throw HashMismatch("pinned input " + p.string() + " has sha256 " + actual + ", expected " +
                         expected);
    }
  }

  const std::uint64_t seed = options.seed.value_or(manifest.seed);
  const fs::path out = options.out_dir;
  const int jobs = std::max(1, options.jobs);
  fs::create_directories(out);
  Runner runner(out);
  PipelineSummary summary;
  auto run = [&](const Stage& s) { summary.stages.push_back(runner.run(s)); };

  auto vocab = [&] { return text::Vocabulary::load(out / kVocab); };
  auto lexicon = [&] {
    return corpora::MiniLexicon::from_json(nlohmann::json::parse(read_file(out / kLexicon)));
  };

  // generate
  {
    corpora::MinilangConfig cfg = corpora::MinilangConfig::defaults();
    try {
      if (manifest.generator_config) cfg = corpora::load_minilang_config(*manifest.generator_config);
    } catch (const std::exception& e) {
      throw StageFailed("generate", e.what());
    }
    Stage s{"generate", {}, {kTrainCorpus, kHeldout, kLexicon, kVocab}, {}, {}};
    if (manifest.generator_config) s.inputs.push_back(fs::absolute(*manifest.generator_config).string());
    s.params = {{"seed", seed},
                {"train_size", manifest.train_size},
                {"heldout_size", manifest.heldout_size},
                {"config", cfg}};
    s.run = [&, cfg] {
      const auto m = corpora::generate_minilang(cfg, manifest.train_size, mix_seed(seed, kGenerateSalt));
      const auto held = corpora::sample_sentences(m.lexicon, manifest.heldout_size,
                                                  mix_seed(seed, kHeldoutSalt), cfg.plain_fraction,
                                                  manifest.train_size);
      corpora::save_corpus_jsonl(m.corpus, out / kTrainCorpus);
      corpora::save_corpus_jsonl(held, out / kHeldout);
      write_file(out / kLexicon, m.lexicon.to_json().dump(2) + "\n");
      m.vocab.save(out / kVocab);
    };
    run(s);
  }

  // train
  {
    Stage s{"train", {kTrainCorpus, kHeldout, kVocab}, {kClassifier, kEncoder, kTrainingReport},
            {{"seed", seed}, {"model", manifest.model}, {"training", manifest.training}}, {}};
    s.run = [&] {
      const auto v = vocab();
      const auto train_set = corpora::to_examples(corpora::load_corpus_jsonl(out / kTrainCorpus), v);
      const auto held = corpora::to_examples(corpora::load_corpus_jsonl(out / kHeldout), v);
      model::ModelConfig mc = manifest.model;
      mc.vocab_size = v.size();
      mc.seed = mix_seed(seed, kInitSalt);
      model::TrainingSchedule sched = manifest.training;
      sched.seed = mix_seed(seed, kTrainSalt);
      model::TransformerModel classifier(mc);
      const auto report = model::train(classifier, train_set, held, sched);
      model::save_checkpoint(classifier, out / kClassifier);
      model::TransformerModel encoder(mc, *report.encoder);
      model::save_checkpoint(encoder, out / kEncoder);
      nlohmann::json j = report;
      j["model_hash"] = model::checkpoint_hash(classifier);
      j["encoder_hash"] = model::checkpoint_hash(encoder);
      write_file(out / kTrainingReport, j.dump(2) + "\n");
    };
    run(s);
  }

  // attack
  {
    Stage s{"attack",
            {kClassifier, kEncoder, kHeldout, kLexicon, kVocab},
            {kOutcomes},
            {{"seed", seed}, {"attack", manifest.to_json().at("attack")}},
            {}};
    for (auto& f : with_formats("reports/table2_attacks")) s.outputs.push_back(f);
    s.run = [&] {
      const auto v = vocab();
      const auto lex = lexicon().synonym_lexicon();
      const auto classifier = model::load_checkpoint(out / kClassifier);
      const auto encoder = model::load_checkpoint(out / kEncoder);
      const similarity::ModelSimilarity sim(encoder, v);
      const auto held = corpora::load_corpus_jsonl(out / kHeldout);
      std::vector<attacks::LabeledText> test;
      for (int i = 0; i < manifest.attack.test_size; ++i) {
        test.push_back({std::to_string(held[i].id), held[i].text, held[i].label});
      }
      std::vector<attacks::AttackConfig> configs;
      for (auto method : manifest.attack.methods) {
        attacks::AttackConfig c;
        c.method = method;
        c.importance = manifest.attack.importance;
        c.filter_threshold = manifest.attack.threshold;
        c.max_perturb_fraction = manifest.attack.budget;
        c.candidates_per_word = manifest.attack.k;
        c.seed = mix_seed(seed, kAttackSalt);
        configs.push_back(c);
      }
      const attacks::AttackResources res{classifier, v, sim, &lex};
      const auto report = attacks::evaluate_attacks(res, test, configs, jobs);
      write_file(out / kOutcomes, attacks::outcomes_to_jsonl(report.outcomes));
      emit_both(attack_table(report, kDataset), out, "reports/table2_attacks");
    };
    run(s);
  }

  // similarity
  {
    Stage s{"similarity", {kOutcomes, kEncoder, kVocab}, with_formats("reports/table3_similarity"),
            {{"nli", manifest.attack.nli}}, {}};
    s.run = [&] {
      const auto v = vocab();
      const auto encoder = model::load_checkpoint(out / kEncoder);
      const similarity::ModelSimilarity sim(encoder, v);
      const auto outcomes = attacks::load_outcomes_jsonl(out / kOutcomes, v);
      const auto nli = make_nli(manifest.attack.nli);
      const auto report = similarity::similarity_report(outcomes, sim, nli.get(), kDataset, jobs);
      emit_both(similarity_table(report, nli != nullptr), out, "reports/table3_similarity");
    };
    run(s);
  }

  // parallel
  {
    Stage s{"parallel", {kHeldout, kLexicon, kVocab, kClassifier}, {kRetention},
            {{"seed", seed}}, {}};
    for (const auto& v : kVariants) {
      s.outputs.push_back(parallel_path(v));
      s.outputs.push_back(filtered_path(v));
    }
    s.run = [&] {
      const auto v = vocab();
      const auto lex = lexicon();
      const auto held = corpora::load_corpus_jsonl(out / kHeldout);
      const auto classifier = model::load_checkpoint(out / kClassifier);
      nlohmann::json retention = nlohmann::json::object();
      for (const auto& name : kVariants) {
        const auto variant = corpora::variant_from_string(name);
        const auto ds = corpora::build_parallel(held, lex, v, variant, mix_seed(seed, kParallelSalt));
        const auto filtered = corpora::filter_prediction_changed(classifier, ds);
        corpora::save_parallel_jsonl(ds, out / parallel_path(name));
        corpora::save_parallel_jsonl(filtered.dataset, out / filtered_path(name));
        retention[name] = {{"pairs", ds.examples.size()},
                           {"skipped_sentences", ds.skipped},
                           {"kept", filtered.dataset.examples.size()},
                           {"retention", filtered.retention}};
      }
      write_file(out / kRetention, retention.dump(2) + "\n");
    };
    run(s);
  }

  // eap
  {
    Stage s{"eap", {kClassifier, kVocab}, {}, manifest.to_json().at("eap"), {}};
    for (const auto& v : kVariants) {
      s.inputs.push_back(filtered_path(v));
      s.outputs.push_back(scores_path(v));
    }
    s.run = [&] {
      const auto v = vocab();
      const auto classifier = model::load_checkpoint(out / kClassifier);
      for (const auto& name : kVariants) {
        const auto ds = corpora::load_parallel_jsonl(out / filtered_path(name), v);
        circuits::save_scores(circuits::score_edges(classifier, ds, manifest.eap, jobs),
                              out / scores_path(name));
      }
    };
    run(s);
  }

  // extract
  {
    Stage s{"extract", {}, {}, {{"sizes", manifest.circuit_sizes}}, {}};
    for (const auto& v : kVariants) {
      s.inputs.push_back(scores_path(v));
      for (int n : manifest.circuit_sizes) s.outputs.push_back(circuit_path(v, n));
    }
    s.run = [&] {
      for (const auto& name : kVariants) {
        const auto scores = circuits::load_scores(out / scores_path(name));
        for (int n : manifest.circuit_sizes) {
          circuits::save_circuit(circuits::extract_circuit(scores, n), out / circuit_path(name, n));
        }
      }
    };
    run(s);
  }

  // eval
  {
    Stage s{"eval", {kClassifier, kVocab, kOutcomes}, {}, {{"sizes", manifest.circuit_sizes}}, {}};
    for (const auto& v : kVariants) {
      s.inputs.push_back(filtered_path(v));
      for (int n : manifest.circuit_sizes) s.inputs.push_back(circuit_path(v, n));
    }
    for (auto& f : with_formats("reports/table4_circuits")) s.outputs.push_back(f);
    for (auto& f : with_formats("reports/table5_robustness")) s.outputs.push_back(f);
    s.run = [&] {
      const auto v = vocab();
      const auto classifier = model::load_checkpoint(out / kClassifier);
      const auto outcomes = attacks::load_outcomes_jsonl(out / kOutcomes, v);
      CircuitSweep sweep;
      RobustnessByVariant robustness;
      for (const auto& name : kVariants) {
        const auto ds = corpora::load_parallel_jsonl(out / filtered_path(name), v);
        std::vector<circuits::Circuit> circs;
        for (int n : manifest.circuit_sizes) {
          circs.push_back(circuits::load_circuit(out / circuit_path(name, n)));
          sweep[name].push_back(circuits::evaluate_circuit(classifier, circs.back(), ds, jobs));
        }
        robustness[name] = circuits::evaluate_circuit_on_attacks(classifier, circs, outcomes, jobs);
      }
      emit_both(circuit_table(sweep, kVariants), out, "reports/table4_circuits");
      emit_both(robustness_table(robustness, kVariants), out, "reports/table5_robustness");
    };
    run(s);
  }

  // diff
  {
    Stage s{"diff",
            {scores_path("syncretic"), scores_path("inflectional")},
            {"reports/fig4_diff.json", "reports/fig4_diff.dot"},
            {{"size", manifest.diff_size}},
            {}};
    s.run = [&] {
      const auto base =
          circuits::extract_circuit(circuits::load_scores(out / scores_path("syncretic")), manifest.diff_size);
      const auto overlay = circuits::extract_circuit(
          circuits::load_scores(out / scores_path("inflectional")), manifest.diff_size);
      const auto d = circuits::diff_circuits(base, overlay);
      nlohmann::json j = d.to_json();
      j["size"] = manifest.diff_size;
      j["base"] = "syncretic";
      j["overlay"] = "inflectional";
      write_file(out / "reports/fig4_diff.json", j.dump(2) + "\n");
      write_file(out / "reports/fig4_diff.dot", d.to_dot());
    };
    run(s);
  }

  summary.artifacts = runner.artifacts();
  write_file(out / "run_log.json", summary.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace mc::harness
