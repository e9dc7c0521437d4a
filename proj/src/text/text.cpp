// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/text/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mc/error.hpp"

namespace mc::text {

namespace {

std::vector<std::string> special_tokens() {
  return {std::string(kPadToken), std::string(kClsToken),
          std::string(kMaskToken), std::string(kUnkToken)};
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(special_tokens()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  word_to_id_.reserve(tokens_.size());
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    if (!word_to_id_.emplace(tokens_[i], i).second) {
      throw ParseError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const auto specials = special_tokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw ParseError("vocabulary: ids 0-3 must be <pad> <cls> <mask> <unk>");
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  std::vector<std::string> tokens = special_tokens();
  std::unordered_map<std::string, int> seen;
  for (const auto& t : tokens) seen.emplace(t, 0);
  for (const auto& w : words) {
    if (w.empty() || std::any_of(w.begin(), w.end(), [](unsigned char c) {
          return std::isspace(c);
        })) {
      throw ParseError("vocabulary: invalid word '" + w + "'");
    }
    if (seen.emplace(w, 0).second) tokens.push_back(w);
  }
  return Vocabulary(std::move(tokens));
}

std::string Vocabulary::to_json() const {
  return nlohmann::json(tokens_).dump();
}

Vocabulary Vocabulary::from_json(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("vocabulary: expected a JSON array");
  std::vector<std::string> tokens;
  for (const auto& t : j) {
    if (!t.is_string()) throw ParseError("vocabulary: non-string entry");
    tokens.push_back(t.get<std::string>());
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("vocabulary: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("vocabulary: cannot write " + path.string());
  out << to_json() << "\n";
}

std::optional<int> Vocabulary::find(std::string_view word) const {
  auto it = word_to_id_.find(std::string(word));
  if (it == word_to_id_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view word) const {
  return find(word).value_or(kUnkId);
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw PositionOutOfRange("vocabulary: id " + std::to_string(id) +
                             " out of range");
  }
  return tokens_[id];
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

TokenizedText tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenizedText t;
  t.words = split_words(text);
  if (t.words.empty()) throw EmptyText("tokenize: text is empty");
  t.ids.reserve(t.words.size());
  for (const auto& w : t.words) {
    const int id = vocab.id(w);
    t.has_unk = t.has_unk || id == kUnkId;
    t.ids.push_back(id);
  }
  return t;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::string detokenize(const TokenizedText& t) { return join_words(t.words); }

}  // namespace mc::text
