// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "doctest.h"
#include "mc/corpora/minilang.hpp"
#include "mc/corpora/parallel.hpp"
#include "mc/error.hpp"
#include "mc/hash.hpp"
#include "support/fixtures.hpp"

using namespace mc;
using namespace mc::corpora;

namespace {

// Positions where two token sequences differ.
int differences(const text::TokenizedText& a, const text::TokenizedText& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.words[i] != b.words[i];
  return d;
}

}  // namespace

TEST_CASE("generation is deterministic in config, size and seed") {
  const auto cfg = MinilangConfig::defaults();
  const auto a = generate_minilang(cfg, 300, 5);
  const auto b = generate_minilang(cfg, 300, 5);
  const auto c = generate_minilang(cfg, 300, 6);
  CHECK(corpus_to_jsonl(a.corpus) == corpus_to_jsonl(b.corpus));
  CHECK(a.lexicon.to_json() == b.lexicon.to_json());
  CHECK(a.vocab == b.vocab);
  CHECK(corpus_to_jsonl(a.corpus) != corpus_to_jsonl(c.corpus));
}

TEST_CASE("generated sentences follow the label rule and the vocabulary") {
  const auto cfg = MinilangConfig::defaults();
  const auto m = generate_minilang(cfg, 400, 9);
  REQUIRE(m.corpus.size() == 400);
  int plain = 0;
  for (std::size_t i = 0; i < m.corpus.size(); ++i) {
    const auto& s = m.corpus[i];
    CHECK(s.label == static_cast<int>(i % 2));
    const int score = m.lexicon.adjectives[s.adjective].score + m.lexicon.nouns[s.noun].valence;
    CHECK(s.label == (score > 0 ? 1 : 0));
    const auto t = text::tokenize(s.text, m.vocab);
    CHECK_FALSE(t.has_unk);
    CHECK(t.words[s.noun_position] == m.lexicon.render(s.noun, m.lexicon.templates[s.template_index]));
    plain += s.reg == Register::Plain;
  }
  CHECK(plain > 60);
  CHECK(plain < 200);
  // Synsets hold original, syncretic and regular members.
  for (const auto& syn : m.lexicon.noun_synsets) {
    REQUIRE(syn.size() == 3);
    CHECK(m.lexicon.nouns[syn[0]].role == NounRole::Original);
    CHECK(m.lexicon.nouns[syn[1]].paradigm.syncretic);
    CHECK_FALSE(m.lexicon.nouns[syn[2]].paradigm.syncretic);
  }
  CHECK_NOTHROW(m.lexicon.synonym_lexicon().validate(m.vocab));
  const auto back = MiniLexicon::from_json(m.lexicon.to_json());
  CHECK(back.to_json() == m.lexicon.to_json());
}

TEST_CASE("generator config errors") {
  auto cfg = MinilangConfig::defaults();
  cfg.n_synsets = 0;
  CHECK_THROWS_AS(generate_minilang(cfg, 10, 1), ConfigInfeasible);
  cfg = MinilangConfig::defaults();
  cfg.case_suffixes = {"", ""};
  CHECK_THROWS_AS(cfg.validate(), ConfigInfeasible);
  cfg = MinilangConfig::defaults();
  cfg.inflected_templates.clear();
  cfg.plain_templates.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigInfeasible);
  CHECK_THROWS_AS(Template::parse("ten {noun:9} {adj}", Register::Inflected, 4), ParseError);
  CHECK_THROWS_AS(Template::parse("ten {noun:0} {adj", Register::Inflected, 4), ParseError);
  const auto dir = testing::scratch_dir("minicfg");
  nlohmann::json j = MinilangConfig::defaults();
  write_file(dir / "c.json", j.dump());
  CHECK(nlohmann::json(load_minilang_config(dir / "c.json")) == j);
}

TEST_CASE("parallel datasets satisfy token-count and single-substitution invariants") {
  const auto& t = testing::trained_language();
  for (auto v : {Variant::Syncretic, Variant::Inflectional, Variant::Plain}) {
    const auto ds = build_parallel(t.heldout, t.lang.lexicon, t.lang.vocab, v, 4);
    CHECK_FALSE(ds.examples.empty());
    CHECK(static_cast<int>(ds.examples.size()) + ds.skipped == static_cast<int>(t.heldout.size()));
    std::set<std::string> ids;
    for (const auto& ex : ds.examples) {
      CHECK(ex.clean.size() == ex.corrupted.size());
      CHECK(differences(ex.clean, ex.corrupted) == 1);
      CHECK(ex.clean.words[ex.substituted_position] != ex.corrupted.words[ex.substituted_position]);
      CHECK_FALSE(ex.corrupted.has_unk);
      CHECK(ids.insert(ex.id).second);
      CHECK(ex.variant == v);
    }
    CHECK_NOTHROW(validate(ds));
    // Round trip through JSONL.
    const auto back = parse_parallel_jsonl(to_jsonl(ds), t.lang.vocab);
    CHECK(back.examples.size() == ds.examples.size());
    CHECK(fingerprint(back) == fingerprint(ds));
  }
}

TEST_CASE("syncretic and inflectional variants differ in the substituted form") {
  const auto& t = testing::trained_language();
  const auto s = build_parallel(t.heldout, t.lang.lexicon, t.lang.vocab, Variant::Syncretic, 4);
  const auto i = build_parallel(t.heldout, t.lang.lexicon, t.lang.vocab, Variant::Inflectional, 4);
  REQUIRE(s.examples.size() == i.examples.size());
  const auto lex = t.lang.lexicon.synonym_lexicon();
  for (std::size_t k = 0; k < s.examples.size(); ++k) {
    const int pos = s.examples[k].substituted_position;
    const auto sa = lex.analyze(s.examples[k].corrupted.words[pos]);
    REQUIRE_FALSE(sa.empty());
    CHECK(lex.entry(sa[0].entry).paradigm.syncretic);
    const auto ia = lex.analyze(i.examples[k].corrupted.words[pos]);
    REQUIRE_FALSE(ia.empty());
    CHECK_FALSE(lex.entry(ia[0].entry).paradigm.syncretic);
  }
}

TEST_CASE("validate names every misaligned example") {
  const auto& t = testing::trained_language();
  auto ds = build_parallel(t.heldout, t.lang.lexicon, t.lang.vocab, Variant::Inflectional, 4);
  ds.examples[1].corrupted = ds.examples[1].clean;  // zero substitutions
  ds.examples[3].corrupted = text::tokenize("a b", t.lang.vocab);
  try {
    validate(ds);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(ds.examples[1].id) != std::string::npos);
    CHECK(msg.find(ds.examples[3].id) != std::string::npos);
  }
  ds.examples[3].id = ds.examples[0].id;
  ds.examples[3].corrupted = ds.examples[3].clean;
  CHECK_THROWS(validate(ds));
}

TEST_CASE("loader rejects misaligned and malformed lines, naming them") {
  const auto v = text::Vocabulary::from_words({"ala", "ma", "kota", "psa", "i"});
  const std::string good = R"({"id":"1","clean_text":"ala ma kota","corrupted_text":"ala ma psa","label":1})";
  const std::string bad3 = R"({"id":"2","clean_text":"ala ma kota","corrupted_text":"ala ma","label":0})";
  const std::string bad4 = R"({"id":"3","clean_text":"ala ma kota i psa","corrupted_text":"ala ma psa","label":"negative"})";
  try {
    parse_parallel_jsonl(good + "\n\n" + bad3 + "\n" + bad4 + "\n", v, 2, "crafted.jsonl");
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("crafted.jsonl") != std::string::npos);
    CHECK(msg.find(" 3") != std::string::npos);
    CHECK(msg.find(" 4") != std::string::npos);
    CHECK(msg.find(" 1") == std::string::npos);
  }
  const auto one = parse_parallel_jsonl(good, v);
  REQUIRE(one.examples.size() == 1);
  CHECK(one.examples[0].substituted_position == 2);
  const std::string pos = R"({"id":"9","clean_text":"ala ma kota","corrupted_text":"ala ma psa","label":"positive"})";
  CHECK(parse_parallel_jsonl(pos, v).examples[0].label == 1);
  CHECK_THROWS_AS(parse_parallel_jsonl(R"({"id":"1","clean_text":"a","corrupted_text":"b","label":7})", v),
                  UnknownLabel);
  CHECK_THROWS_AS(parse_parallel_jsonl(R"({"id":"1","clean_text":"a","corrupted_text":"b","label":"meh"})", v),
                  UnknownLabel);
  CHECK_THROWS_AS(parse_parallel_jsonl("{not json", v), ParseError);
  CHECK_THROWS_AS(parse_parallel_jsonl(good + "\n" + good, v), ParseError);
  CHECK_THROWS_AS(parse_parallel_jsonl(R"({"id":"1","clean_text":"a"})", v), ParseError);
  CHECK_THROWS_AS(variant_from_string("dual"), ParseError);
}

TEST_CASE("prediction-change filter") {
  const auto& t = testing::trained_language();
  const auto ds = build_parallel(t.heldout, t.lang.lexicon, t.lang.vocab, Variant::Inflectional, 4);
  const auto once = filter_prediction_changed(t.classifier, ds);
  CHECK(once.retention >= 0.0);
  CHECK(once.retention <= 1.0);
  CHECK(once.retention == doctest::Approx(double(once.dataset.examples.size()) / ds.examples.size()));
  for (const auto& ex : once.dataset.examples) {
    CHECK(model::forward(t.classifier, ex.clean.ids).label() !=
          model::forward(t.classifier, ex.corrupted.ids).label());
  }
  const auto twice = filter_prediction_changed(t.classifier, once.dataset);
  CHECK(to_jsonl(twice.dataset) == to_jsonl(once.dataset));
  if (!once.dataset.examples.empty()) CHECK(twice.retention == 1.0);
  auto same = ds;
  for (auto& ex : same.examples) ex.corrupted = ex.clean;
  const auto none = filter_prediction_changed(t.classifier, same);
  CHECK(none.retention == 0.0);
  CHECK(none.dataset.examples.empty());
}

TEST_CASE("corpus JSONL round trip") {
  const auto& t = testing::trained_language();
  const auto dir = testing::scratch_dir("corpus");
  std::vector<Sentence> some(t.heldout.begin(), t.heldout.begin() + 10);
  save_corpus_jsonl(some, dir / "c.jsonl");
  CHECK(corpus_to_jsonl(load_corpus_jsonl(dir / "c.jsonl")) == corpus_to_jsonl(some));
  write_file(dir / "bad.jsonl", "{\"id\": 1, \"text\": 3}\n");
  CHECK_THROWS_AS(load_corpus_jsonl(dir / "bad.jsonl"), ParseError);
}
