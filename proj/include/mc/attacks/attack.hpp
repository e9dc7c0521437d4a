// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_ATTACKS_ATTACK_HPP_
#define MC_ATTACKS_ATTACK_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mc/attacks/lexicon.hpp"
#include "mc/model/transformer.hpp"
#include "mc/random.hpp"
#include "mc/similarity/semantic.hpp"
#include "mc/text/text.hpp"

namespace mc::attacks {

enum class AttackMethod { TextBugger, TextFooler, WordNetTextFooler, BertAttack };
enum class ImportanceMethod { Masking, Jacobian, Shapley };

// "tb", "tf", "wntf", "ba".
std::string short_name(AttackMethod m);
std::string display_name(AttackMethod m);
AttackMethod attack_method_from_string(std::string_view s);
std::string to_string(ImportanceMethod m);  // "mask", "jacobian", "shapley"
ImportanceMethod importance_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Victim model access with query accounting.

class Classifier {
 public:
  explicit Classifier(const model::TransformerModel& model) : model_(model) {}

  model::Prediction predict(std::span<const int> ids) const {
    ++queries_;
    return model::forward(model_, ids);
  }
  // One forward + backward pass; counted as one query.
  model::GradientResult gradient(std::span<const int> ids,
                                 const model::GradientRequest& request) const {
    ++queries_;
    return model::gradients(model_, ids, request);
  }

  // Masked-LM proposals at a word position; one query.
  std::vector<model::TokenScore> mlm(std::span<const int> ids, int position, int k) const {
    ++queries_;
    return model::mlm_candidates(model_, ids, position, k);
  }

  const model::TransformerModel& model() const { return model_; }
  int queries() const { return queries_; }

 private:
  const model::TransformerModel& model_;
  mutable int queries_ = 0;
};

// ---------------------------------------------------------------------------
// Word importance.

struct ImportanceRanking {
  ImportanceMethod method = ImportanceMethod::Masking;
  std::vector<double> scores;  // one per word position
  std::vector<int> order;      // positions by descending score, ties ascending
};

ImportanceRanking rank_positions(std::vector<double> scores, ImportanceMethod method);

// score(i) = p_label(text) - p_label(text with word i replaced by MASK).
ImportanceRanking importance_masking(const Classifier& victim, const text::TokenizedText& text,
                                     int label);

// score(i) = L2 norm of d(label logit) / d(embedding of word i).
ImportanceRanking importance_jacobian(const Classifier& victim, const text::TokenizedText& text,
                                      int label);

enum class ShapleyMode { Auto, Exact, MonteCarlo };
inline constexpr int kExactShapleyMaxWords = 8;

// Shapley value of each word in the game v(S) = p_label with every word
// outside S masked. Auto uses exact enumeration up to kExactShapleyMaxWords.
ImportanceRanking importance_shapley(const Classifier& victim, const text::TokenizedText& text,
                                     int label, int permutations, std::uint64_t seed,
                                     ShapleyMode mode = ShapleyMode::Auto);

// Coalitions are bitmasks over n players (n <= 63).
using CoalitionValue = std::function<double(std::uint64_t)>;
std::vector<double> shapley_exact(int n, const CoalitionValue& value);
std::vector<double> shapley_monte_carlo(int n, const CoalitionValue& value, int permutations,
                                        Rng& rng);

// ---------------------------------------------------------------------------
// Character-level bugs.

enum class BugOp { Insert, Delete, Swap, SubC, SubW };
std::string to_string(BugOp op);

using HomoglyphTable = std::vector<std::pair<char, char>>;
const HomoglyphTable& default_homoglyphs();

// Throws WordTooShort when the word has fewer than two characters.
std::string insert_space(std::string_view word, int position);  // position in [1, len-1]
std::string delete_char(std::string_view word, int position);   // position in [0, len-1]
std::string swap_adjacent(std::string_view word, int pair);     // swaps pair, pair+1
// Replaces the first character that has a homoglyph; unchanged if none.
std::string substitute_homoglyph(std::string_view word, const HomoglyphTable& table);

// Seeded variant choosing the position uniformly. SubW is not a character
// operation and throws InputError. Throws WordTooShort.
std::string perturb_textbugger(std::string_view word, BugOp op, Rng& rng,
                               const HomoglyphTable& table = default_homoglyphs());

// ---------------------------------------------------------------------------
// Substitution candidates.

// k nearest vocabulary words by cosine over the token-embedding table,
// excluding the word itself and specials; ties by ascending token id.
// Out-of-vocabulary words yield no candidates.
std::vector<std::string> candidates_embedding(const model::TransformerModel& model,
                                              const text::Vocabulary& vocab,
                                              std::string_view word, int k);

// ---------------------------------------------------------------------------
// Attack driver.

struct AttackConfig {
  AttackMethod method = AttackMethod::TextFooler;
  ImportanceMethod importance = ImportanceMethod::Masking;
  double max_perturb_fraction = 0.3;
  int candidates_per_word = 8;
  double filter_threshold = 0.90;
  int shapley_permutations = 2000;
  std::uint64_t seed = 0;
  HomoglyphTable homoglyphs = default_homoglyphs();

  // Throws InputError.
  void validate() const;
};

struct Perturbation {
  int position = 0;
  std::string old_word;
  std::string new_word;
  std::string op;
};

struct AttackOutcome {
  std::string id;
  AttackMethod method = AttackMethod::TextFooler;
  text::TokenizedText original;
  text::TokenizedText adversarial;
  int label = 0;
  int pred_before = 0;
  int pred_after = 0;
  double conf_before = 0.0;  // probability of the gold label
  double conf_after = 0.0;
  std::vector<Perturbation> perturbations;
  bool success = false;
  // The original prediction was already wrong, so nothing was attempted.
  bool skipped = false;
  double similarity = 1.0;  // raw cosine to the original
  int queries = 0;
};

struct AttackResources {
  const model::TransformerModel& model;
  const text::Vocabulary& vocab;
  const similarity::SimilarityProvider& similarity;
  const SynonymLexicon* lexicon = nullptr;  // required by WordNetTextFooler
};

int perturbation_budget(double fraction, int n_words);

// Greedy word-by-word attack in importance order. Never throws for attack
// failure; all failure modes are encoded in the outcome.
AttackOutcome run_attack(const AttackResources& res, const text::TokenizedText& text, int label,
                         const AttackConfig& config, const std::string& id = "");

struct LabeledText {
  std::string id;
  std::string text;
  int label = 0;
};

struct MethodSummary {
  AttackMethod method = AttackMethod::TextFooler;
  int n = 0;
  double clean_accuracy = 0.0;
  double attacked_accuracy = 0.0;
  double delta_accuracy = 0.0;
  double success_rate = 0.0;  // successes / attempted
  int attempted = 0;
  int successes = 0;
  double mean_queries = 0.0;
  double mean_perturbations = 0.0;
};

struct AttackReport {
  std::vector<MethodSummary> rows;
  std::vector<AttackOutcome> outcomes;  // grouped by config, then test order
};

// One row per config. Per-example work fans out over `jobs` threads; results
// are ordered deterministically.
AttackReport evaluate_attacks(const AttackResources& res, std::span<const LabeledText> testset,
                              std::span<const AttackConfig> configs, int jobs = 1);

MethodSummary summarize(AttackMethod method, std::span<const AttackOutcome> outcomes);

nlohmann::json to_json(const AttackOutcome& o);
AttackOutcome outcome_from_json(const nlohmann::json& j, const text::Vocabulary& vocab);
std::string outcomes_to_jsonl(std::span<const AttackOutcome> outcomes);
std::vector<AttackOutcome> load_outcomes_jsonl(const std::filesystem::path& path,
                                               const text::Vocabulary& vocab);

}  // namespace mc::attacks

#endif  // MC_ATTACKS_ATTACK_HPP_
