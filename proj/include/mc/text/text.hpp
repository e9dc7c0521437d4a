// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_TEXT_TEXT_HPP_
#define MC_TEXT_TEXT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mc::text {

inline constexpr int kPadId = 0;
inline constexpr int kClsId = 1;
inline constexpr int kMaskId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kNumSpecials = 4;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kClsToken = "<cls>";
inline constexpr std::string_view kMaskToken = "<mask>";
inline constexpr std::string_view kUnkToken = "<unk>";

inline bool is_special(int id) { return id >= 0 && id < kNumSpecials; }

// Immutable token universe. Ids are dense and 0-based; ids 0..3 are the
// specials PAD, CLS, MASK, UNK in that order.
class Vocabulary {
 public:
  // Specials only.
  Vocabulary();

  // `tokens` lists every surface string in id order, specials included.
  // Throws ParseError on duplicates or misplaced specials.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  // Specials followed by `words` in first-occurrence order, duplicates dropped.
  static Vocabulary from_words(const std::vector<std::string>& words);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_json() const;
  static Vocabulary from_json(std::string_view json);

  std::optional<int> find(std::string_view word) const;
  // UNK for out-of-vocabulary words.
  int id(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> word_to_id_;
};

struct TokenizedText {
  std::vector<std::string> words;
  std::vector<int> ids;
  bool has_unk = false;

  std::size_t size() const { return words.size(); }
  friend bool operator==(const TokenizedText&, const TokenizedText&) = default;
};

// Lowercased maximal runs of non-whitespace.
std::vector<std::string> split_words(std::string_view text);

// Throws EmptyText when `text` is whitespace-only.
TokenizedText tokenize(std::string_view text, const Vocabulary& vocab);

std::string detokenize(const TokenizedText& t);
std::string join_words(const std::vector<std::string>& words);

}  // namespace mc::text

#endif  // MC_TEXT_TEXT_HPP_
