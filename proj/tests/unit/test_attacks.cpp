// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mc/attacks/attack.hpp"
#include "mc/error.hpp"
#include "mc/hash.hpp"
#include "mc/random.hpp"
#include "mc/similarity/semantic.hpp"
#include "support/fixtures.hpp"

using namespace mc;
using namespace mc::attacks;

namespace {

// Shapley values straight from the permutation definition.
std::vector<double> shapley_by_permutations(int n, const CoalitionValue& v) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> phi(n, 0.0);
  int count = 0;
  do {
    std::uint64_t mask = 0;
    for (int p : perm) {
      const double before = v(mask);
      mask |= std::uint64_t{1} << p;
      phi[p] += v(mask) - before;
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& x : phi) x /= count;
  return phi;
}

// A non-additive game with pairwise interactions.
double game(std::uint64_t s) {
  static const double w[] = {0.3, -0.2, 0.5, 0.1, 0.05, -0.4};
  double v = 0.0;
  for (int i = 0; i < 6; ++i) {
    if (s >> i & 1) v += w[i];
  }
  if ((s & 3) == 3) v += 0.25;
  if ((s & 0x14) == 0x14) v -= 0.3;
  return std::tanh(v);
}

}  // namespace

TEST_CASE("exact Shapley equals the permutation definition") {
  for (int n : {1, 3, 5, 6}) {
    const auto exact = shapley_exact(n, game);
    const auto oracle = shapley_by_permutations(n, game);
    for (int i = 0; i < n; ++i) CHECK(std::abs(exact[i] - oracle[i]) < 1e-12);
  }
  CHECK_THROWS_AS(shapley_exact(21, game), InputError);
}

TEST_CASE("Shapley efficiency and Monte Carlo accuracy") {
  const int n = 6;
  const auto exact = shapley_exact(n, game);
  const double total = std::accumulate(exact.begin(), exact.end(), 0.0);
  CHECK(std::abs(total - (game((1u << n) - 1) - game(0))) < 1e-12);
  Rng rng(5);
  const auto mc = shapley_monte_carlo(n, game, 2000, rng);
  for (int i = 0; i < n; ++i) CHECK(std::abs(mc[i] - exact[i]) < 0.05);
  // Every sampled permutation satisfies efficiency, so the estimate does too.
  CHECK(std::abs(std::accumulate(mc.begin(), mc.end(), 0.0) - total) < 1e-12);
}

TEST_CASE("rank positions: descending, ties by position") {
  const auto r = rank_positions({0.1, 0.5, 0.5, -1.0, 0.2}, ImportanceMethod::Masking);
  CHECK(r.order == std::vector<int>{1, 2, 4, 0, 3});
}

TEST_CASE("character bugs") {
  CHECK(insert_space("kotek", 2) == "ko tek");
  CHECK(delete_char("kotek", 0) == "otek");
  CHECK(swap_adjacent("kotek", 1) == "ktoek");
  CHECK(substitute_homoglyph("kot", default_homoglyphs()) == "k0t");
  CHECK(substitute_homoglyph("xyz", default_homoglyphs()) == "xyz");
  CHECK_THROWS_AS(insert_space("a", 0), WordTooShort);
  CHECK_THROWS_AS(swap_adjacent("a", 0), WordTooShort);
  CHECK_THROWS_AS(insert_space("kot", 0), PositionOutOfRange);
  CHECK_THROWS_AS(delete_char("kot", 3), PositionOutOfRange);
  CHECK_THROWS_AS(swap_adjacent("kot", 2), PositionOutOfRange);
  Rng a(3), b(3);
  for (auto op : {BugOp::Insert, BugOp::Delete, BugOp::Swap, BugOp::SubC}) {
    CHECK(perturb_textbugger("doskonaly", op, a) == perturb_textbugger("doskonaly", op, b));
  }
  CHECK_THROWS_AS(perturb_textbugger("kot", BugOp::SubW, a), InputError);
  CHECK(to_string(BugOp::SubC) == "subc");
}

TEST_CASE("perturbation budget") {
  CHECK(perturbation_budget(0.3, 10) == 3);
  CHECK(perturbation_budget(0.3, 7) == 3);
  CHECK(perturbation_budget(0.3, 3) == 1);
  CHECK(perturbation_budget(0.5, 4) == 2);
  CHECK(perturbation_budget(0.0, 5) == 0);
}

TEST_CASE("method names") {
  for (auto m : {AttackMethod::TextBugger, AttackMethod::TextFooler,
                 AttackMethod::WordNetTextFooler, AttackMethod::BertAttack}) {
    CHECK(attack_method_from_string(short_name(m)) == m);
    CHECK(attack_method_from_string(display_name(m)) == m);
  }
  CHECK_THROWS_AS(attack_method_from_string("pwws"), InputError);
  CHECK(importance_from_string("shapley") == ImportanceMethod::Shapley);
  CHECK_THROWS_AS(importance_from_string("random"), InputError);
  AttackConfig c;
  c.filter_threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("embedding candidates equal brute-force cosine ranking") {
  const auto& t = testing::trained_language();
  const auto& E = t.classifier.params().token_embedding;
  const std::string word = t.lang.vocab.token(10);
  const auto got = candidates_embedding(t.classifier, t.lang.vocab, word, 5);
  std::vector<std::pair<double, int>> all;
  for (int id = text::kNumSpecials; id < t.lang.vocab.size(); ++id) {
    if (id == 10) continue;
    const double c = E.row(10).dot(E.row(id)) / (E.row(10).norm() * E.row(id).norm());
    all.emplace_back(-c, id);
  }
  std::sort(all.begin(), all.end());
  REQUIRE(got.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(got[i] == t.lang.vocab.token(all[i].second));
  CHECK(candidates_embedding(t.classifier, t.lang.vocab, "zzzz", 5).empty());
}

TEST_CASE("lexicon candidates respect the inflectional slot") {
  SynonymLexicon lex;
  lex.add_synset({{"dom", {false, {"dom", "domu", "domowi"}}},
                  {"gmach", {false, {"gmach", "gmachu", "gmachowi"}}},
                  {"atelier", {true, {"atelier"}}}});
  CHECK(candidates_lexicon(lex, "domu") == std::vector<std::string>{"gmachu", "atelier"});
  CHECK(candidates_lexicon(lex, "domu", 2) == std::vector<std::string>{"gmachowi", "atelier"});
  const auto sync = candidates_lexicon(lex, "atelier");
  CHECK(sync == std::vector<std::string>{"dom", "domu", "domowi", "gmach", "gmachu", "gmachowi"});
  CHECK(candidates_lexicon(lex, "kot").empty());
  CHECK_THROWS_AS(lex.add_synset({{"dom", {true, {"dom"}}}}), ParseError);
  const auto back = SynonymLexicon::from_json(lex.to_json());
  CHECK(candidates_lexicon(back, "gmach") == candidates_lexicon(lex, "gmach"));
}

TEST_CASE("masking importance uses n + 1 queries") {
  const auto& t = testing::trained_language();
  const Classifier victim(t.classifier);
  const auto text = text::tokenize(t.heldout[0].text, t.lang.vocab);
  const auto r = importance_masking(victim, text, t.heldout[0].label);
  CHECK(victim.queries() == static_cast<int>(text.size()) + 1);
  CHECK(r.scores.size() == text.size());
  const auto j = importance_jacobian(victim, text, t.heldout[0].label);
  CHECK(j.scores.size() == text.size());
  for (double s : j.scores) CHECK(s >= 0.0);
}

TEST_CASE("Shapley importance: exact and sampled agree on short sentences") {
  const auto& t = testing::trained_language();
  const Classifier victim(t.classifier);
  for (int i = 0; i < 8; ++i) {
    const auto text = text::tokenize(t.heldout[i].text, t.lang.vocab);
    if (text.size() > 6) continue;
    const auto exact = importance_shapley(victim, text, t.heldout[i].label, 2000, 1, ShapleyMode::Exact);
    const auto mc = importance_shapley(victim, text, t.heldout[i].label, 2000, 1,
                                       ShapleyMode::MonteCarlo);
    for (std::size_t k = 0; k < text.size(); ++k) CHECK(std::abs(exact.scores[k] - mc.scores[k]) < 0.05);
  }
}

TEST_CASE("attack outcomes honor the filter and the budget") {
  const auto& t = testing::trained_language();
  const similarity::ModelSimilarity sim(t.encoder, t.lang.vocab);
  const auto lex = t.lang.lexicon.synonym_lexicon();
  const AttackResources res{t.classifier, t.lang.vocab, sim, &lex};
  std::vector<LabeledText> test;
  for (int i = 0; i < 30; ++i) {
    test.push_back({std::to_string(t.heldout[i].id), t.heldout[i].text, t.heldout[i].label});
  }
  std::vector<AttackConfig> configs;
  for (auto m : {AttackMethod::TextBugger, AttackMethod::TextFooler,
                 AttackMethod::WordNetTextFooler, AttackMethod::BertAttack}) {
    AttackConfig c;
    c.method = m;
    c.seed = 9;
    configs.push_back(c);
  }
  const auto report = evaluate_attacks(res, test, configs, 3);
  REQUIRE(report.rows.size() == 4);
  REQUIRE(report.outcomes.size() == 120);
  int total_success = 0;
  for (const auto& o : report.outcomes) {
    if (o.skipped) {
      CHECK(o.pred_before != o.label);
      CHECK(o.perturbations.empty());
      continue;
    }
    const int budget = perturbation_budget(0.3, static_cast<int>(o.original.size()));
    CHECK(static_cast<int>(o.perturbations.size()) <= budget);
    if (o.success) {
      ++total_success;
      CHECK(o.pred_after != o.label);
      CHECK(o.similarity >= 0.9);
      CHECK(sim.raw_cosine(text::detokenize(o.original), text::detokenize(o.adversarial)) ==
            doctest::Approx(o.similarity).epsilon(1e-12));
      CHECK(forward(t.classifier, o.adversarial.ids).label() == o.pred_after);
    }
    CHECK(o.queries > 0);
  }
  CHECK(total_success > 0);
  // Same inputs, different worker count: identical outcomes.
  const auto again = evaluate_attacks(res, test, configs, 1);
  CHECK(outcomes_to_jsonl(again.outcomes) == outcomes_to_jsonl(report.outcomes));
  // Summary arithmetic.
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& row = report.rows[k];
    std::span<const AttackOutcome> block(report.outcomes.data() + 30 * k, 30);
    int attempted = 0, successes = 0, correct = 0;
    for (const auto& o : block) {
      attempted += !o.skipped;
      successes += o.success;
      correct += (o.success ? o.pred_after : o.pred_before) == o.label;
    }
    CHECK(row.attempted == attempted);
    CHECK(row.successes == successes);
    CHECK(row.attacked_accuracy == doctest::Approx(correct / 30.0));
    CHECK(row.delta_accuracy == doctest::Approx(row.clean_accuracy - row.attacked_accuracy));
    if (attempted) CHECK(row.success_rate == doctest::Approx(double(successes) / attempted));
  }
}

TEST_CASE("wntf without a lexicon is rejected") {
  const auto& t = testing::trained_language();
  const similarity::ModelSimilarity sim(t.encoder, t.lang.vocab);
  const AttackResources res{t.classifier, t.lang.vocab, sim, nullptr};
  AttackConfig c;
  c.method = AttackMethod::WordNetTextFooler;
  CHECK_THROWS_AS(run_attack(res, text::tokenize(t.heldout[0].text, t.lang.vocab), 0, c),
                  InputError);
}

TEST_CASE("outcome JSONL round trip") {
  const auto& t = testing::trained_language();
  AttackOutcome o;
  o.id = "17";
  o.method = AttackMethod::BertAttack;
  o.original = text::tokenize(t.heldout[0].text, t.lang.vocab);
  o.adversarial = o.original;
  o.adversarial.words[1] = "xyz";
  o.adversarial = text::tokenize(text::detokenize(o.adversarial), t.lang.vocab);
  o.label = 1;
  o.pred_before = 1;
  o.pred_after = 0;
  o.conf_before = 0.9;
  o.conf_after = 0.2;
  o.perturbations = {{1, o.original.words[1], "xyz", "mlm"}};
  o.success = true;
  o.similarity = 0.95;
  o.queries = 12;
  const auto j = to_json(o);
  for (const char* key : {"id", "original", "adversarial", "label", "pred_before", "pred_after",
                          "conf_before", "conf_after", "perturbations", "success", "similarity",
                          "queries"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["perturbations"][0].contains("pos"));
  const auto back = outcome_from_json(j, t.lang.vocab);
  CHECK(to_json(back) == j);
  const auto dir = testing::scratch_dir("outcomes");
  const std::vector<AttackOutcome> v{o, o};
  write_file(dir / "o.jsonl", outcomes_to_jsonl(v));
  CHECK(load_outcomes_jsonl(dir / "o.jsonl", t.lang.vocab).size() == 2);
  write_file(dir / "bad.jsonl", "{\"id\": 1}\n");
  CHECK_THROWS_AS(load_outcomes_jsonl(dir / "bad.jsonl", t.lang.vocab), ParseError);
}
