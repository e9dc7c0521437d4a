// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include <unistd.h>

#include "mc/model/training.hpp"
#include "mc/random.hpp"

namespace mc::testing {

model::ModelConfig tiny_config(int layers, int heads, int vocab, std::uint64_t seed) {
  model::ModelConfig c;
  c.n_layers = layers;
  c.n_heads = heads;
  c.d_model = 8;
  c.d_ff = 12;
  c.max_seq = 12;
  c.vocab_size = vocab;
  c.seed = seed;
  return c;
}

std::vector<int> random_ids(int n, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> ids(n);
  for (auto& id : ids) id = text::kNumSpecials + rng.below(vocab - text::kNumSpecials);
  return ids;
}

namespace {

TrainedLanguage build() {
  auto cfg = corpora::MinilangConfig::defaults();
  auto lang = corpora::generate_minilang(cfg, 1200, 11);
  auto held = corpora::sample_sentences(lang.lexicon, 200, 12, cfg.plain_fraction, 1200);
  model::ModelConfig mc;
  mc.n_layers = 2;
  mc.n_heads = 2;
  mc.d_model = 16;
  mc.d_ff = 32;
  mc.vocab_size = lang.vocab.size();
  mc.seed = 13;
  model::TransformerModel m(mc);
  model::TrainingSchedule s;
  s.mlm_epochs = 3;
  s.cls_epochs = 10;
  s.cls_learning_rate = 0.03;
  s.seed = 14;
  const auto train = corpora::to_examples(lang.corpus, lang.vocab);
  const auto ho = corpora::to_examples(held, lang.vocab);
  auto report = model::train(m, train, ho, s);
  model::TransformerModel enc(mc, *report.encoder);
  return {std::move(lang), std::move(held), std::move(m), std::move(enc), report.heldout_accuracy};
}

}  // namespace

const TrainedLanguage& trained_language() {
  static const TrainedLanguage t = build();
  return t;
}

std::pair<int, int> brute_force_graph_counts(int layers, int heads) {
  // Each component is (kind, layer, head). A head of layer l reads the
  // residual at the start of layer l; the MLP of layer l reads it after
  // every head of layer l has written; logits read the final residual.
  struct Comp {
    int kind;  // 0 input, 1 head, 2 mlp, 3 logits
    int layer;
  };
  std::vector<Comp> comps = {{0, -1}};
  for (int l = 0; l < layers; ++l) {
    for (int h = 0; h < heads; ++h) comps.push_back({1, l});
    comps.push_back({2, l});
  }
  comps.push_back({3, layers});
  // Time at which a component writes, and at which it reads.
  auto write_time = [](const Comp& c) { return c.kind == 0 ? 0 : 3 * c.layer + c.kind; };
  auto read_time = [](const Comp& c) { return c.kind == 3 ? 3 * c.layer + 1 : 3 * c.layer + c.kind; };
  int edges = 0;
  for (const auto& u : comps) {
    if (u.kind == 3) continue;  // logits write nothing
    for (const auto& v : comps) {
      if (v.kind == 0) continue;  // input reads nothing
      if (write_time(u) < read_time(v)) ++edges;
    }
  }
  return {static_cast<int>(comps.size()), edges};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("mc_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mc::testing
