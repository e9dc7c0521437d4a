// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_CORPORA_MINILANG_HPP_
#define MC_CORPORA_MINILANG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mc/attacks/lexicon.hpp"
#include "mc/model/training.hpp"
#include "mc/text/text.hpp"

namespace mc::corpora {

// Minilang is a synthetic sentiment language with two registers: an
// inflected one whose noun slots carry a grammatical case, and a plain one
// without case. The label is positive iff the adjective score plus the
// noun's valence is positive.
enum class Register { Inflected, Plain };

std::string to_string(Register r);
Register register_from_string(const std::string& s);

enum class NounRole { Original = 0, SyncreticSynonym = 1, RegularSynonym = 2 };

struct Noun {
  std::string lemma;
  attacks::Paradigm paradigm;
  int valence = 0;
  int synset = 0;
  NounRole role = NounRole::Original;
};

struct Adjective {
  std::string word;
  int score = 0;  // +-1 weak, +-3 strong
  int synset = 0;
};

struct TemplatePart {
  enum class Kind { Literal, Noun, Adjective };
  Kind kind = Kind::Literal;
  std::vector<std::string> options;  // literal alternatives
};

// Parsed from e.g. "ten {noun:0} byl {bardzo|calkiem} {adj}". A plain
// template writes "{noun}".
struct Template {
  std::string source;
  Register reg = Register::Inflected;
  int noun_slot = 0;
  std::vector<TemplatePart> parts;

  // Throws ParseError.
  static Template parse(const std::string& source, Register reg, int n_slots);
};

struct MinilangConfig {
  std::uint64_t seed = 7;
  int n_synsets = 8;
  std::vector<std::string> case_suffixes{"", "a", "u", "em"};
  std::vector<std::string> strong_positive{"wspanialy", "doskonaly", "cudowny"};
  std::vector<std::string> weak_positive{"niezly", "przyzwoity", "znosny"};
  std::vector<std::string> strong_negative{"okropny", "fatalny", "straszny"};
  std::vector<std::string> weak_negative{"slaby", "kiepski", "marny"};
  std::vector<std::string> inflected_templates;
  std::vector<std::string> plain_templates;
  double plain_fraction = 0.3;

  int n_slots() const { return static_cast<int>(case_suffixes.size()); }
  static MinilangConfig defaults();
  // Throws ConfigInfeasible.
  void validate() const;
};

void to_json(nlohmann::json& j, const MinilangConfig& c);
void from_json(const nlohmann::json& j, MinilangConfig& c);
MinilangConfig load_minilang_config(const std::filesystem::path& path);

struct MiniLexicon {
  int n_slots = 0;
  std::vector<Noun> nouns;
  std::vector<Adjective> adjectives;
  std::vector<Template> templates;
  // Noun indices per synset, ordered original, syncretic, regular.
  std::vector<std::vector<int>> noun_synsets;

  int noun_index(const std::string& lemma) const;
  // Surface form of a noun in a template's slot (plain templates use the
  // base form).
  const std::string& render(int noun, const Template& t) const;
  // Nouns and adjectives grouped into synsets.
  attacks::SynonymLexicon synonym_lexicon() const;

  nlohmann::json to_json() const;
  static MiniLexicon from_json(const nlohmann::json& j);
};

struct Sentence {
  int id = 0;
  std::string text;
  int label = 0;
  Register reg = Register::Inflected;
  int template_index = 0;
  int noun = 0;
  int adjective = 0;
  int noun_position = 0;
};

struct Minilang {
  std::vector<Sentence> corpus;
  MiniLexicon lexicon;
  text::Vocabulary vocab;
};

// Deterministic in (config, n_sentences, seed). Labels alternate 0,1,0,...
// Throws ConfigInfeasible.
Minilang generate_minilang(const MinilangConfig& config, int n_sentences, std::uint64_t seed);

// Sentences rendered with a fixed lexicon and vocabulary; used to draw
// further splits (held-out sets, attack sets) from an existing language.
std::vector<Sentence> sample_sentences(const MiniLexicon& lexicon, int n_sentences,
                                       std::uint64_t seed, double plain_fraction,
                                       int first_id = 0);

std::vector<model::LabeledExample> to_examples(const std::vector<Sentence>& corpus,
                                               const text::Vocabulary& vocab);

void save_corpus_jsonl(const std::vector<Sentence>& corpus, const std::filesystem::path& path);
std::vector<Sentence> load_corpus_jsonl(const std::filesystem::path& path);
std::string corpus_to_jsonl(const std::vector<Sentence>& corpus);

}  // namespace mc::corpora

#endif  // MC_CORPORA_MINILANG_HPP_
