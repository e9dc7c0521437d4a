// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_ATTACKS_LEXICON_HPP_
#define MC_ATTACKS_LEXICON_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mc/text/text.hpp"

namespace mc::attacks {

// Inflectional paradigm of a lemma. A regular paradigm has one surface form
// per grammatical slot; a syncretic paradigm has a single form for all slots.
struct Paradigm {
  bool syncretic = false;
  std::vector<std::string> forms;

  const std::string& render(int slot) const;
};

struct LexiconEntry {
  std::string lemma;
  Paradigm paradigm;
};

class SynonymLexicon {
 public:
  struct Analysis {
    int entry = 0;
    std::optional<int> slot;  // empty for syncretic forms
  };

  // Adds a synset; returns its index. Throws ParseError when a lemma is
  // already present.
  int add_synset(std::vector<LexiconEntry> members);

  // Every (lemma, slot) reading of a surface form.
  std::vector<Analysis> analyze(std::string_view surface) const;

  const LexiconEntry& entry(int index) const { return entries_.at(index); }
  int synset_of(int entry) const { return synset_of_.at(entry); }
  const std::vector<int>& synset(int index) const { return synsets_.at(index); }
  int synset_count() const { return static_cast<int>(synsets_.size()); }
  int entry_count() const { return static_cast<int>(entries_.size()); }

  // Throws ParseError naming the first surface form missing from `vocab`.
  void validate(const text::Vocabulary& vocab) const;

  nlohmann::json to_json() const;
  static SynonymLexicon from_json(const nlohmann::json& j);

 private:
  std::vector<LexiconEntry> entries_;
  std::vector<int> synset_of_;
  std::vector<std::vector<int>> synsets_;
  std::unordered_map<std::string, std::vector<Analysis>> surface_index_;
};

// Synonyms of `word` rendered in grammatical slot `slot`. Regular synonyms
// give their slot form; syncretic synonyms give their single form. When the
// slot is not given it is taken from the word's own analysis; a syncretic
// word carries no slot, in which case every form of a regular synonym is
// offered. Words outside the lexicon yield an empty list.
std::vector<std::string> candidates_lexicon(const SynonymLexicon& lexicon,
                                            std::string_view word,
                                            std::optional<int> slot = std::nullopt);

}  // namespace mc::attacks

#endif  // MC_ATTACKS_LEXICON_HPP_
