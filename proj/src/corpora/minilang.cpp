// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/corpora/minilang.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mc/error.hpp"
#include "mc/hash.hpp"
#include "mc/random.hpp"

namespace mc::corpora {

namespace {

constexpr std::string_view kConsonants = "bcdfgklmnprstwz";
constexpr std::string_view kVowels = "aeiouy";
constexpr int kValences[] = {-2, 0, 2};
constexpr std::uint64_t kLexiconSalt = 0x6c6578;
constexpr std::uint64_t kSentenceSalt = 0x73656e74;

std::string syllables(Rng& rng, int n, bool closed) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    s.push_back(kConsonants[rng.below(static_cast<int>(kConsonants.size()))]);
    s.push_back(kVowels[rng.below(static_cast<int>(kVowels.size()))]);
  }
  if (closed) s.push_back(kConsonants[rng.below(static_cast<int>(kConsonants.size()))]);
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<std::string> split_options(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : body) {
    if (c == '|') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

int pick_label_adjective(const MiniLexicon& lex, int noun, int target, Rng& rng) {
  std::vector<int> ok;
  for (int a = 0; a < static_cast<int>(lex.adjectives.size()); ++a) {
    const int s = lex.adjectives[a].score + lex.nouns[noun].valence;
    if ((s > 0 ? 1 : 0) == target) ok.push_back(a);
  }
  if (ok.empty()) throw ConfigInfeasible("minilang: no adjective yields label " + std::to_string(target));
  return rng.pick(ok);
}

Sentence render_sentence(const MiniLexicon& lex, int id, int template_index, int noun,
                         int adjective, Rng& rng) {
  const Template& t = lex.templates[template_index];
  Sentence s;
  s.id = id;
  s.reg = t.reg;
  s.template_index = template_index;
  s.noun = noun;
  s.adjective = adjective;
  const int score = lex.adjectives[adjective].score + lex.nouns[noun].valence;
  s.label = score > 0 ? 1 : 0;
  std::vector<std::string> words;
  for (const auto& part : t.parts) {
    switch (part.kind) {
      case TemplatePart::Kind::Literal:
        words.push_back(part.options.size() == 1 ? part.options[0] : rng.pick(part.options));
        break;
      case TemplatePart::Kind::Noun:
        s.noun_position = static_cast<int>(words.size());
        words.push_back(lex.render(noun, t));
        break;
      case TemplatePart::Kind::Adjective:
        words.push_back(lex.adjectives[adjective].word);
        break;
    }
  }
  s.text = text::join_words(words);
  return s;
}

MiniLexicon build_lexicon(const MinilangConfig& config, Rng& rng) {
  MiniLexicon lex;
  lex.n_slots = config.n_slots();
  std::set<std::string> used;
  auto reserve = [&](const std::string& w) {
    if (!used.insert(w).second) throw ConfigInfeasible("minilang: duplicate word '" + w + "'");
  };
  for (const auto* list : {&config.strong_positive, &config.weak_positive,
                           &config.strong_negative, &config.weak_negative}) {
    for (const auto& w : *list) reserve(w);
  }
  for (const auto& src : config.inflected_templates) {
    lex.templates.push_back(Template::parse(src, Register::Inflected, lex.n_slots));
  }
  for (const auto& src : config.plain_templates) {
    lex.templates.push_back(Template::parse(src, Register::Plain, lex.n_slots));
  }
  std::set<std::string> literals;
  for (const auto& t : lex.templates) {
    for (const auto& part : t.parts) {
      for (const auto& o : part.options) literals.insert(o);
    }
  }
  for (const auto& w : literals) {
    if (used.count(w)) throw ConfigInfeasible("minilang: filler '" + w + "' is also an adjective");
    used.insert(w);
  }

  auto fresh_forms = [&](bool syncretic) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::vector<std::string> forms;
      if (syncretic) {
        forms.push_back(syllables(rng, 3, false));
      } else {
        const std::string stem = syllables(rng, 2, true);
        for (const auto& suf : config.case_suffixes) forms.push_back(stem + suf);
      }
      if (std::none_of(forms.begin(), forms.end(),
                       [&](const std::string& f) { return used.count(f) > 0; })) {
        for (const auto& f : forms) used.insert(f);
        return forms;
      }
    }
    throw ConfigInfeasible("minilang: could not generate unique noun forms");
  };

  for (int s = 0; s < config.n_synsets; ++s) {
    int v[3];
    do {
      for (int& x : v) x = kValences[rng.below(3)];
    } while (v[0] == v[1] && v[1] == v[2]);
    std::vector<int> members;
    for (int role = 0; role < 3; ++role) {
      Noun n;
      n.paradigm.syncretic = role == static_cast<int>(NounRole::SyncreticSynonym);
      n.paradigm.forms = fresh_forms(n.paradigm.syncretic);
      n.lemma = n.paradigm.forms[0];
      n.valence = v[role];
      n.synset = s;
      n.role = static_cast<NounRole>(role);
      members.push_back(static_cast<int>(lex.nouns.size()));
      lex.nouns.push_back(std::move(n));
    }
    lex.noun_synsets.push_back(std::move(members));
  }

  int adj_synset = 0;
  auto add_adjectives = [&](const std::vector<std::string>& strong,
                            const std::vector<std::string>& weak, int sign) {
    const std::size_t paired = std::min(strong.size(), weak.size());
    for (std::size_t i = 0; i < std::max(strong.size(), weak.size()); ++i) {
      const int synset = adj_synset++;
      if (i < strong.size()) lex.adjectives.push_back({strong[i], 3 * sign, synset});
      if (i < weak.size()) {
        lex.adjectives.push_back({weak[i], sign, i < paired ? synset : adj_synset++});
      }
    }
  };
  add_adjectives(config.strong_positive, config.weak_positive, +1);
  add_adjectives(config.strong_negative, config.weak_negative, -1);
  return lex;
}

text::Vocabulary build_vocab(const MiniLexicon& lex) {
  std::vector<std::string> words;
  for (const auto& n : lex.nouns) {
    words.insert(words.end(), n.paradigm.forms.begin(), n.paradigm.forms.end());
  }
  for (const auto& a : lex.adjectives) words.push_back(a.word);
  std::set<std::string> literals;
  for (const auto& t : lex.templates) {
    for (const auto& part : t.parts) {
      for (const auto& o : part.options) literals.insert(o);
    }
  }
  words.insert(words.end(), literals.begin(), literals.end());
  return text::Vocabulary::from_words(words);
}

}  // namespace

std::string to_string(Register r) { return r == Register::Inflected ? "inflected" : "plain"; }

Register register_from_string(const std::string& s) {
  if (s == "inflected") return Register::Inflected;
  if (s == "plain") return Register::Plain;
  throw ParseError("unknown register '" + s + "'");
}

Template Template::parse(const std::string& source, Register reg, int n_slots) {
  Template t;
  t.source = source;
  t.reg = reg;
  int nouns = 0;
  int adjs = 0;
  for (const auto& tok : split_ws(source)) {
    TemplatePart part;
    if (tok.size() >= 2 && tok.front() == '{' && tok.back() == '}') {
      const std::string body = tok.substr(1, tok.size() - 2);
      if (body == "adj") {
        part.kind = TemplatePart::Kind::Adjective;
        ++adjs;
      } else if (body == "noun" || body.rfind("noun:", 0) == 0) {
        part.kind = TemplatePart::Kind::Noun;
        ++nouns;
        if (reg == Register::Plain) {
          if (body != "noun") throw ParseError("template '" + source + "': plain nouns take no case");
        } else {
          try {
            t.noun_slot = std::stoi(body.substr(5));
          } catch (const std::exception&) {
            throw ParseError("template '" + source + "': bad noun slot");
          }
          if (t.noun_slot < 0 || t.noun_slot >= n_slots) {
            throw ParseError("template '" + source + "': noun slot out of range");
          }
        }
      } else {
        part.options = split_options(body);
        for (auto& o : part.options) {
          if (o.empty()) throw ParseError("template '" + source + "': empty alternative");
          std::transform(o.begin(), o.end(), o.begin(), [](unsigned char c) { return std::tolower(c); });
        }
      }
    } else {
      std::string w = tok;
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
      part.options = {w};
    }
    t.parts.push_back(std::move(part));
  }
  if (nouns != 1 || adjs != 1) {
    throw ParseError("template '" + source + "' needs exactly one noun and one adjective slot");
  }
  return t;
}

MinilangConfig MinilangConfig::defaults() {
  MinilangConfig c;
  c.inflected_templates = {
      "ten {noun:0} byl {naprawde|bardzo|calkiem} {adj}",
      "{moim|naszym} zdaniem {noun:0} jest {adj} {i|oraz} {tyle|basta}",
      "nie {ma|bylo} tu {noun:1} {tak|rownie} {adj} jak {zawsze|wczoraj}",
      "{szukam|brak} {noun:1} ktory {byl|jest} {adj}",
      "{dziekuje|ufam} {noun:2} bo {byl|jest} {adj}",
      "{przygladam|przyznaje} sie {noun:2} {bardzo|wciaz} {adj}",
      "{przed|nad} {noun:3} {bylo|jest} {dosc|bardzo} {adj}",
      "{z|pod} {noun:3} {wszystko|zawsze} {bylo|jest} {adj} {dzis|teraz}",
  };
  c.plain_templates = {
      "the {noun} was {really|very|quite} {adj}",
      "{in|for} my opinion the {noun} is {adj}",
      "i think this {noun} looks {adj} {today|again}",
      "what a {adj} {noun} {indeed|overall}",
  };
  return c;
}

void MinilangConfig::validate() const {
  if (n_synsets < 1) throw ConfigInfeasible("minilang: n_synsets must be >= 1");
  if (case_suffixes.empty()) throw ConfigInfeasible("minilang: at least one case slot is required");
  if (std::set<std::string>(case_suffixes.begin(), case_suffixes.end()).size() !=
      case_suffixes.size()) {
    throw ConfigInfeasible("minilang: case suffixes must be distinct");
  }
  if (inflected_templates.empty() && plain_templates.empty()) {
    throw ConfigInfeasible("minilang: zero templates");
  }
  if (strong_positive.empty() || strong_negative.empty()) {
    throw ConfigInfeasible("minilang: strong adjectives of both polarities are required");
  }
  if (plain_fraction < 0.0 || plain_fraction > 1.0) {
    throw ConfigInfeasible("minilang: plain_fraction must be in [0,1]");
  }
}

void to_json(nlohmann::json& j, const MinilangConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"n_synsets", c.n_synsets},
                     {"case_suffixes", c.case_suffixes},
                     {"strong_positive", c.strong_positive},
                     {"weak_positive", c.weak_positive},
                     {"strong_negative", c.strong_negative},
                     {"weak_negative", c.weak_negative},
                     {"inflected_templates", c.inflected_templates},
                     {"plain_templates", c.plain_templates},
                     {"plain_fraction", c.plain_fraction}};
}

void from_json(const nlohmann::json& j, MinilangConfig& c) {
  const MinilangConfig d = MinilangConfig::defaults();
  c.seed = j.value("seed", d.seed);
  c.n_synsets = j.value("n_synsets", d.n_synsets);
  c.case_suffixes = j.value("case_suffixes", d.case_suffixes);
  c.strong_positive = j.value("strong_positive", d.strong_positive);
  c.weak_positive = j.value("weak_positive", d.weak_positive);
  c.strong_negative = j.value("strong_negative", d.strong_negative);
  c.weak_negative = j.value("weak_negative", d.weak_negative);
  c.inflected_templates = j.value("inflected_templates", d.inflected_templates);
  c.plain_templates = j.value("plain_templates", d.plain_templates);
  c.plain_fraction = j.value("plain_fraction", d.plain_fraction);
}

MinilangConfig load_minilang_config(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path)).get<MinilangConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("generator config " + path.string() + ": " + e.what());
  }
}

int MiniLexicon::noun_index(const std::string& lemma) const {
  for (int i = 0; i < static_cast<int>(nouns.size()); ++i) {
    if (nouns[i].lemma == lemma) return i;
  }
  return -1;
}

const std::string& MiniLexicon::render(int noun, const Template& t) const {
  const auto& p = nouns.at(noun).paradigm;
  return t.reg == Register::Plain ? p.forms[0] : p.render(t.noun_slot);
}

attacks::SynonymLexicon MiniLexicon::synonym_lexicon() const {
  attacks::SynonymLexicon lex;
  for (const auto& members : noun_synsets) {
    std::vector<attacks::LexiconEntry> entries;
    for (int n : members) entries.push_back({nouns[n].lemma, nouns[n].paradigm});
    lex.add_synset(std::move(entries));
  }
  int max_synset = -1;
  for (const auto& a : adjectives) max_synset = std::max(max_synset, a.synset);
  for (int s = 0; s <= max_synset; ++s) {
    std::vector<attacks::LexiconEntry> entries;
    for (const auto& a : adjectives) {
      if (a.synset == s) entries.push_back({a.word, {true, {a.word}}});
    }
    if (!entries.empty()) lex.add_synset(std::move(entries));
  }
  return lex;
}

nlohmann::json MiniLexicon::to_json() const {
  nlohmann::json j;
  j["n_slots"] = n_slots;
  auto& ns = j["nouns"] = nlohmann::json::array();
  for (const auto& n : nouns) {
    ns.push_back({{"lemma", n.lemma},
                  {"paradigm", n.paradigm.syncretic ? "syncretic" : "regular"},
                  {"forms", n.paradigm.forms},
                  {"valence", n.valence},
                  {"synset", n.synset},
                  {"role", static_cast<int>(n.role)}});
  }
  auto& as = j["adjectives"] = nlohmann::json::array();
  for (const auto& a : adjectives) {
    as.push_back({{"word", a.word}, {"score", a.score}, {"synset", a.synset}});
  }
  auto& ts = j["templates"] = nlohmann::json::array();
  for (const auto& t : templates) ts.push_back({{"register", to_string(t.reg)}, {"source", t.source}});
  j["noun_synsets"] = noun_synsets;
  return j;
}

MiniLexicon MiniLexicon::from_json(const nlohmann::json& j) {
  MiniLexicon lex;
  try {
    lex.n_slots = j.at("n_slots").get<int>();
    for (const auto& n : j.at("nouns")) {
      Noun noun;
      noun.lemma = n.at("lemma").get<std::string>();
      noun.paradigm.syncretic = n.at("paradigm").get<std::string>() == "syncretic";
      noun.paradigm.forms = n.at("forms").get<std::vector<std::string>>();
      noun.valence = n.at("valence").get<int>();
      noun.synset = n.at("synset").get<int>();
      noun.role = static_cast<NounRole>(n.at("role").get<int>());
      lex.nouns.push_back(std::move(noun));
    }
    for (const auto& a : j.at("adjectives")) {
      lex.adjectives.push_back(
          {a.at("word").get<std::string>(), a.at("score").get<int>(), a.at("synset").get<int>()});
    }
    for (const auto& t : j.at("templates")) {
      lex.templates.push_back(Template::parse(t.at("source").get<std::string>(),
                                              register_from_string(t.at("register").get<std::string>()),
                                              lex.n_slots));
    }
    lex.noun_synsets = j.at("noun_synsets").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("lexicon: ") + e.what());
  }
  return lex;
}

std::vector<Sentence> sample_sentences(const MiniLexicon& lex, int n_sentences, std::uint64_t seed,
                                       double plain_fraction, int first_id) {
  std::vector<int> inflected;
  std::vector<int> plain;
  for (int t = 0; t < static_cast<int>(lex.templates.size()); ++t) {
    (lex.templates[t].reg == Register::Plain ? plain : inflected).push_back(t);
  }
  if (inflected.empty() && plain.empty()) throw ConfigInfeasible("minilang: zero templates");
  if (lex.nouns.empty() || lex.adjectives.empty()) throw ConfigInfeasible("minilang: empty lexicon");
  Rng rng(mix_seed(seed, kSentenceSalt));
  std::vector<Sentence> out;
  out.reserve(static_cast<std::size_t>(std::max(0, n_sentences)));
  for (int i = 0; i < n_sentences; ++i) {
    const bool use_plain = plain.empty() ? false : inflected.empty() ? true : rng.bernoulli(plain_fraction);
    const int t = rng.pick(use_plain ? plain : inflected);
    const int noun = rng.below(static_cast<int>(lex.nouns.size()));
    const int adj = pick_label_adjective(lex, noun, i % 2, rng);
    out.push_back(render_sentence(lex, first_id + i, t, noun, adj, rng));
  }
  return out;
}

Minilang generate_minilang(const MinilangConfig& config, int n_sentences, std::uint64_t seed) {
  config.validate();
  Rng rng(mix_seed(seed, kLexiconSalt));
  Minilang m;
  m.lexicon = build_lexicon(config, rng);
  m.vocab = build_vocab(m.lexicon);
  m.corpus = sample_sentences(m.lexicon, n_sentences, seed, config.plain_fraction);
  return m;
}

std::vector<model::LabeledExample> to_examples(const std::vector<Sentence>& corpus,
                                               const text::Vocabulary& vocab) {
  std::vector<model::LabeledExample> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back({text::tokenize(s.text, vocab).ids, s.label});
  return out;
}

std::string corpus_to_jsonl(const std::vector<Sentence>& corpus) {
  std::string out;
  for (const auto& s : corpus) {
    nlohmann::json j{{"id", s.id},
                     {"text", s.text},
                     {"label", s.label},
                     {"register", to_string(s.reg)},
                     {"template", s.template_index},
                     {"noun", s.noun},
                     {"adjective", s.adjective},
                     {"noun_position", s.noun_position}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

void save_corpus_jsonl(const std::vector<Sentence>& corpus, const std::filesystem::path& path) {
  write_file(path, corpus_to_jsonl(corpus));
}

std::vector<Sentence> load_corpus_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Sentence> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Sentence s;
      s.id = j.at("id").get<int>();
      s.text = j.at("text").get<std::string>();
      s.label = j.at("label").get<int>();
      s.reg = register_from_string(j.value("register", std::string("inflected")));
      s.template_index = j.value("template", 0);
      s.noun = j.value("noun", -1);
      s.adjective = j.value("adjective", -1);
      s.noun_position = j.value("noun_position", -1);
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mc::corpora
