// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/attacks/lexicon.hpp"

#include <algorithm>
#include <set>

#include "mc/error.hpp"

namespace mc::attacks {

const std::string& Paradigm::render(int slot) const {
  if (syncretic || forms.size() == 1) return forms.at(0);
  if (slot < 0 || slot >= static_cast<int>(forms.size())) {
    throw PositionOutOfRange("paradigm has no slot " + std::to_string(slot));
  }
  return forms[slot];
}

int SynonymLexicon::add_synset(std::vector<LexiconEntry> members) {
  const int synset = static_cast<int>(synsets_.size());
  std::vector<int> ids;
  for (auto& m : members) {
    for (const auto& e : entries_) {
      if (e.lemma == m.lemma) throw ParseError("lexicon: duplicate lemma '" + m.lemma + "'");
    }
    if (m.paradigm.forms.empty()) throw ParseError("lexicon: lemma without forms");
    const int id = static_cast<int>(entries_.size());
    for (int s = 0; s < static_cast<int>(m.paradigm.forms.size()); ++s) {
      Analysis a{id, m.paradigm.syncretic ? std::nullopt : std::optional<int>(s)};
      surface_index_[m.paradigm.forms[s]].push_back(a);
    }
    entries_.push_back(std::move(m));
    synset_of_.push_back(synset);
    ids.push_back(id);
  }
  synsets_.push_back(std::move(ids));
  return synset;
}

std::vector<SynonymLexicon::Analysis> SynonymLexicon::analyze(std::string_view surface) const {
  auto it = surface_index_.find(std::string(surface));
  if (it == surface_index_.end()) return {};
  return it->second;
}

void SynonymLexicon::validate(const text::Vocabulary& vocab) const {
  for (const auto& e : entries_) {
    for (const auto& f : e.paradigm.forms) {
      if (!vocab.contains(f)) throw ParseError("lexicon form '" + f + "' not in vocabulary");
    }
  }
}

nlohmann::json SynonymLexicon::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& members : synsets_) {
    nlohmann::json set = nlohmann::json::array();
    for (int id : members) {
      const auto& e = entries_[id];
      set.push_back({{"lemma", e.lemma},
                     {"paradigm", e.paradigm.syncretic ? "syncretic" : "regular"},
                     {"forms", e.paradigm.forms}});
    }
    out.push_back(std::move(set));
  }
  return out;
}

SynonymLexicon SynonymLexicon::from_json(const nlohmann::json& j) {
  SynonymLexicon lex;
  try {
    for (const auto& set : j) {
      std::vector<LexiconEntry> members;
      for (const auto& e : set) {
        members.push_back({e.at("lemma").get<std::string>(),
                           {e.at("paradigm").get<std::string>() == "syncretic",
                            e.at("forms").get<std::vector<std::string>>()}});
      }
      lex.add_synset(std::move(members));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("lexicon: ") + e.what());
  }
  return lex;
}

std::vector<std::string> candidates_lexicon(const SynonymLexicon& lexicon, std::string_view word,
                                            std::optional<int> slot) {
  std::vector<std::string> out;
  std::set<std::string> seen{std::string(word)};
  for (const auto& a : lexicon.analyze(word)) {
    const std::optional<int> target = slot ? slot : a.slot;
    for (int member : lexicon.synset(lexicon.synset_of(a.entry))) {
      if (member == a.entry) continue;
      const Paradigm& p = lexicon.entry(member).paradigm;
      if (p.syncretic || target) {
        const std::string& form = p.render(target.value_or(0));
        if (seen.insert(form).second) out.push_back(form);
      } else {
        for (const auto& form : p.forms) {
          if (seen.insert(form).second) out.push_back(form);
        }
      }
    }
  }
  return out;
}

}  // namespace mc::attacks
