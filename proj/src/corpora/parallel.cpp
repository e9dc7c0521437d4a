// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/corpora/parallel.hpp"

#include <set>
#include <sstream>

#include "json.hpp"
#include "mc/error.hpp"
#include "mc/hash.hpp"
#include "mc/random.hpp"

namespace mc::corpora {

namespace {

int first_difference(const text::TokenizedText& a, const text::TokenizedText& b) {
  for (std::size_t i = 0; i < a.words.size() && i < b.words.size(); ++i) {
    if (a.words[i] != b.words[i]) return static_cast<int>(i);
  }
  return -1;
}

int count_differences(const text::TokenizedText& a, const text::TokenizedText& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.words.size() && i < b.words.size(); ++i) n += a.words[i] != b.words[i];
  return n;
}

int parse_label(const nlohmann::json& j, int n_classes) {
  if (j.is_number_integer()) {
    const int v = j.get<int>();
    if (v >= 0 && v < n_classes) return v;
    throw UnknownLabel("label " + std::to_string(v) + " outside [0, " + std::to_string(n_classes) + ")");
  }
  if (j.is_string() && n_classes == 2) {
    const auto s = j.get<std::string>();
    if (s == "negative") return 0;
    if (s == "positive") return 1;
  }
  throw UnknownLabel("unknown label " + j.dump());
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Syncretic:
      return "syncretic";
    case Variant::Inflectional:
      return "inflectional";
    case Variant::Plain:
      return "plain";
  }
  return {};
}

Variant variant_from_string(const std::string& s) {
  if (s == "syncretic") return Variant::Syncretic;
  if (s == "inflectional") return Variant::Inflectional;
  if (s == "plain") return Variant::Plain;
  throw ParseError("unknown variant '" + s + "'");
}

void validate(const ParallelDataset& dataset) {
  std::set<std::string> ids;
  std::vector<std::string> bad;
  for (const auto& ex : dataset.examples) {
    if (!ids.insert(ex.id).second) throw ParseError("parallel dataset: duplicate id '" + ex.id + "'");
    if (ex.variant != dataset.variant) throw ParseError("parallel dataset: mixed variants");
    const bool aligned = ex.clean.size() == ex.corrupted.size() &&
                         ex.clean.ids.size() == ex.clean.size() &&
                         ex.corrupted.ids.size() == ex.corrupted.size();
    if (!aligned || count_differences(ex.clean, ex.corrupted) != 1 ||
        first_difference(ex.clean, ex.corrupted) != ex.substituted_position) {
      bad.push_back(ex.id);
    }
  }
  if (!bad.empty()) {
    std::string msg = "parallel dataset: misaligned examples:";
    for (const auto& id : bad) msg += " " + id;
    throw AlignmentError(msg);
  }
}

ParallelDataset build_parallel(const std::vector<Sentence>& corpus, const MiniLexicon& lexicon,
                               const text::Vocabulary& vocab, Variant variant, std::uint64_t seed) {
  ParallelDataset out;
  out.variant = variant;
  out.provenance = "minilang:" + to_string(variant) + ":seed=" + std::to_string(seed);
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(variant) + 17));
  const Register wanted = variant == Variant::Plain ? Register::Plain : Register::Inflected;
  for (const auto& s : corpus) {
    const bool eligible = s.reg == wanted && s.noun >= 0 &&
                          s.noun < static_cast<int>(lexicon.nouns.size()) &&
                          lexicon.nouns[s.noun].role == NounRole::Original &&
                          s.template_index >= 0 &&
                          s.template_index < static_cast<int>(lexicon.templates.size());
    if (!eligible) {
      ++out.skipped;
      continue;
    }
    const auto& members = lexicon.noun_synsets.at(lexicon.nouns[s.noun].synset);
    const Template& t = lexicon.templates[s.template_index];
    std::string replacement;
    switch (variant) {
      case Variant::Syncretic:
        replacement = lexicon.nouns[members.at(1)].paradigm.forms.at(0);
        break;
      case Variant::Inflectional:
        replacement = lexicon.render(members.at(2), t);
        break;
      case Variant::Plain:
        replacement = lexicon.nouns[members.at(1 + rng.below(2))].paradigm.forms.at(0);
        break;
    }
    ParallelExample ex;
    ex.id = to_string(variant) + "-" + std::to_string(s.id);
    ex.clean = text::tokenize(s.text, vocab);
    std::vector<std::string> words = ex.clean.words;
    if (s.noun_position < 0 || s.noun_position >= static_cast<int>(words.size()) ||
        words[s.noun_position] == replacement) {
      ++out.skipped;
      continue;
    }
    words[s.noun_position] = replacement;
    ex.corrupted = text::tokenize(text::join_words(words), vocab);
    ex.label = s.label;
    ex.variant = variant;
    ex.substituted_position = s.noun_position;
    out.examples.push_back(std::move(ex));
  }
  validate(out);
  return out;
}

FilterResult filter_prediction_changed(const model::TransformerModel& model,
                                       const ParallelDataset& dataset) {
  FilterResult r;
  r.dataset.variant = dataset.variant;
  r.dataset.provenance = dataset.provenance + "|prediction-changed";
  r.dataset.skipped = dataset.skipped;
  for (const auto& ex : dataset.examples) {
    const int clean = model::forward(model, ex.clean.ids).label();
    const int corrupted = model::forward(model, ex.corrupted.ids).label();
    if (clean != corrupted) {
      r.dataset.examples.push_back(ex);
    } else {
      ++r.dataset.skipped;
    }
  }
  r.retention = dataset.examples.empty()
                    ? 0.0
                    : static_cast<double>(r.dataset.examples.size()) /
                          static_cast<double>(dataset.examples.size());
  return r;
}

ParallelDataset parse_parallel_jsonl(std::string_view content, const text::Vocabulary& vocab,
                                     int n_classes, const std::string& source) {
  ParallelDataset out;
  out.provenance = "jsonl:" + sha256_hex(content);
  std::istringstream in{std::string(content)};
  std::set<std::string> ids;
  std::vector<int> misaligned;
  std::optional<Variant> variant;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    ParallelExample ex;
    try {
      ex.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      ex.clean = text::tokenize(j.at("clean_text").get<std::string>(), vocab);
      ex.corrupted = text::tokenize(j.at("corrupted_text").get<std::string>(), vocab);
      ex.label = parse_label(j.at("label"), n_classes);
      ex.variant = variant_from_string(j.value("variant", std::string("syncretic")));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const EmptyText& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const UnknownLabel& e) {
      throw UnknownLabel(where + ": " + e.what());
    }
    if (!ids.insert(ex.id).second) throw ParseError(where + ": duplicate id '" + ex.id + "'");
    if (variant && *variant != ex.variant) throw ParseError(where + ": mixed variants");
    variant = ex.variant;
    if (ex.clean.size() != ex.corrupted.size()) {
      misaligned.push_back(line_no);
      continue;
    }
    ex.substituted_position = first_difference(ex.clean, ex.corrupted);
    out.examples.push_back(std::move(ex));
  }
  if (!misaligned.empty()) {
    std::string msg = source + ": token counts differ on line(s)";
    for (int l : misaligned) msg += " " + std::to_string(l);
    throw AlignmentError(msg);
  }
  out.variant = variant.value_or(Variant::Syncretic);
  return out;
}

ParallelDataset load_parallel_jsonl(const std::filesystem::path& path, const text::Vocabulary& vocab,
                                    int n_classes) {
  return parse_parallel_jsonl(read_file(path), vocab, n_classes, path.string());
}

std::string to_jsonl(const ParallelDataset& dataset) {
  std::string out;
  for (const auto& ex : dataset.examples) {
    nlohmann::json j{{"id", ex.id},
                     {"clean_text", text::detokenize(ex.clean)},
                     {"corrupted_text", text::detokenize(ex.corrupted)},
                     {"label", ex.label},
                     {"variant", to_string(ex.variant)}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

void save_parallel_jsonl(const ParallelDataset& dataset, const std::filesystem::path& path) {
  write_file(path, to_jsonl(dataset));
}

std::string fingerprint(const ParallelDataset& dataset) { return sha256_hex(to_jsonl(dataset)); }

}  // namespace mc::corpora
