// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/attacks/attack.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mc/error.hpp"
#include "mc/hash.hpp"
#include "mc/parallel.hpp"

namespace mc::attacks {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void require_length(std::string_view word) {
  if (word.size() < 2) {
    throw WordTooShort("word '" + std::string(word) + "' has fewer than two characters");
  }
}

std::vector<int> masked_ids(const text::TokenizedText& t, std::uint64_t keep) {
  std::vector<int> ids = t.ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!(keep >> i & 1)) ids[i] = text::kMaskId;
  }
  return ids;
}

}  // namespace

std::string short_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::TextBugger:
      return "tb";
    case AttackMethod::TextFooler:
      return "tf";
    case AttackMethod::WordNetTextFooler:
      return "wntf";
    case AttackMethod::BertAttack:
      return "ba";
  }
  return {};
}

std::string display_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::TextBugger:
      return "TextBugger";
    case AttackMethod::TextFooler:
      return "TextFooler";
    case AttackMethod::WordNetTextFooler:
      return "WordNetTextFooler";
    case AttackMethod::BertAttack:
      return "BertAttack";
  }
  return {};
}

AttackMethod attack_method_from_string(std::string_view s) {
  for (auto m : {AttackMethod::TextBugger, AttackMethod::TextFooler,
                 AttackMethod::WordNetTextFooler, AttackMethod::BertAttack}) {
    if (s == short_name(m) || s == display_name(m)) return m;
  }
  throw InputError("unknown attack method '" + std::string(s) + "'");
}

std::string to_string(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::Masking:
      return "mask";
    case ImportanceMethod::Jacobian:
      return "jacobian";
    case ImportanceMethod::Shapley:
      return "shapley";
  }
  return {};
}

ImportanceMethod importance_from_string(std::string_view s) {
  if (s == "mask" || s == "masking") return ImportanceMethod::Masking;
  if (s == "jacobian") return ImportanceMethod::Jacobian;
  if (s == "shapley") return ImportanceMethod::Shapley;
  throw InputError("unknown importance method '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

ImportanceRanking rank_positions(std::vector<double> scores, ImportanceMethod method) {
  ImportanceRanking r;
  r.method = method;
  r.order.resize(scores.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  r.scores = std::move(scores);
  return r;
}

ImportanceRanking importance_masking(const Classifier& victim, const text::TokenizedText& text,
                                     int label) {
  const double base = victim.predict(text.ids).probs(label);
  std::vector<double> scores(text.size());
  std::vector<int> ids = text.ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int saved = ids[i];
    ids[i] = text::kMaskId;
    scores[i] = base - victim.predict(ids).probs(label);
    ids[i] = saved;
  }
  return rank_positions(std::move(scores), ImportanceMethod::Masking);
}

ImportanceRanking importance_jacobian(const Classifier& victim, const text::TokenizedText& text,
                                      int label) {
  model::GradientRequest req;
  req.metric = model::MetricKind::ClassLogit;
  req.label = label;
  const auto g = victim.gradient(text.ids, req);
  std::vector<double> scores(text.size());
  // Row 0 of the input gradient is the CLS position.
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = g.input_output.row(static_cast<Eigen::Index>(i) + 1).norm();
  }
  return rank_positions(std::move(scores), ImportanceMethod::Jacobian);
}

std::vector<double> shapley_exact(int n, const CoalitionValue& value) {
  if (n < 0 || n > 20) throw InputError("exact Shapley supports up to 20 players");
  std::vector<double> fact(n + 1, 1.0);
  for (int i = 1; i <= n; ++i) fact[i] = fact[i - 1] * i;
  const std::uint64_t full = n == 0 ? 0 : (std::uint64_t{1} << n);
  std::vector<double> v(full == 0 ? 1 : full);
  for (std::uint64_t s = 0; s < v.size(); ++s) v[s] = value(s);
  std::vector<double> phi(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t s = 0; s < full; ++s) {
      if (s & bit) continue;
      const int size = std::popcount(s);
      const double w = fact[size] * fact[n - size - 1] / fact[n];
      phi[i] += w * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

std::vector<double> shapley_monte_carlo(int n, const CoalitionValue& value, int permutations,
                                        Rng& rng) {
  if (n < 0 || n > 63) throw InputError("Shapley supports up to 63 players");
  if (permutations < 1) throw InputError("Shapley needs at least one permutation");
  std::unordered_map<std::uint64_t, double> memo;
  auto v = [&](std::uint64_t s) {
    auto it = memo.find(s);
    if (it != memo.end()) return it->second;
    const double x = value(s);
    memo.emplace(s, x);
    return x;
  };
  std::vector<double> phi(n, 0.0);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int p = 0; p < permutations; ++p) {
    rng.shuffle(perm);
    std::uint64_t s = 0;
    double prev = v(0);
    for (int i : perm) {
      s |= std::uint64_t{1} << i;
      const double cur = v(s);
      phi[i] += cur - prev;
      prev = cur;
    }
  }
  for (auto& x : phi) x /= permutations;
  return phi;
}

ImportanceRanking importance_shapley(const Classifier& victim, const text::TokenizedText& text,
                                     int label, int permutations, std::uint64_t seed,
                                     ShapleyMode mode) {
  const int n = static_cast<int>(text.size());
  auto value = [&](std::uint64_t keep) {
    return victim.predict(masked_ids(text, keep)).probs(label);
  };
  const bool exact =
      mode == ShapleyMode::Exact || (mode == ShapleyMode::Auto && n <= kExactShapleyMaxWords);
  std::vector<double> phi;
  if (exact) {
    phi = shapley_exact(n, value);
  } else {
    Rng rng(mix_seed(seed, 0x5ab1e));
    phi = shapley_monte_carlo(n, value, permutations, rng);
  }
  return rank_positions(std::move(phi), ImportanceMethod::Shapley);
}

// ---------------------------------------------------------------------------

std::string to_string(BugOp op) {
  switch (op) {
    case BugOp::Insert:
      return "insert";
    case BugOp::Delete:
      return "delete";
    case BugOp::Swap:
      return "swap";
    case BugOp::SubC:
      return "subc";
    case BugOp::SubW:
      return "subw";
  }
  return {};
}

const HomoglyphTable& default_homoglyphs() {
  static const HomoglyphTable table = {{'l', '1'}, {'o', '0'}, {'i', '1'},
                                       {'a', '@'}, {'e', '3'}, {'s', '$'}};
  return table;
}

std::string insert_space(std::string_view word, int position) {
  require_length(word);
  if (position < 1 || position >= static_cast<int>(word.size())) {
    throw PositionOutOfRange("insert position " + std::to_string(position) + " not interior");
  }
  std::string out(word);
  out.insert(static_cast<std::size_t>(position), 1, ' ');
  return out;
}

std::string delete_char(std::string_view word, int position) {
  require_length(word);
  if (position < 0 || position >= static_cast<int>(word.size())) {
    throw PositionOutOfRange("delete position " + std::to_string(position));
  }
  std::string out(word);
  out.erase(static_cast<std::size_t>(position), 1);
  return out;
}

std::string swap_adjacent(std::string_view word, int pair) {
  require_length(word);
  if (pair < 0 || pair + 1 >= static_cast<int>(word.size())) {
    throw PositionOutOfRange("swap pair " + std::to_string(pair));
  }
  std::string out(word);
  std::swap(out[pair], out[pair + 1]);
  return out;
}

std::string substitute_homoglyph(std::string_view word, const HomoglyphTable& table) {
  std::string out(word);
  for (char& c : out) {
    for (const auto& [from, to] : table) {
      if (c == from) {
        c = to;
        return out;
      }
    }
  }
  return out;
}

std::string perturb_textbugger(std::string_view word, BugOp op, Rng& rng,
                               const HomoglyphTable& table) {
  require_length(word);
  const int len = static_cast<int>(word.size());
  switch (op) {
    case BugOp::Insert:
      return insert_space(word, 1 + rng.below(len - 1));
    case BugOp::Delete:
      return delete_char(word, rng.below(len));
    case BugOp::Swap:
      return swap_adjacent(word, rng.below(len - 1));
    case BugOp::SubC:
      return substitute_homoglyph(word, table);
    case BugOp::SubW:
      break;
  }
  throw InputError("word substitution is not a character operation");
}

// ---------------------------------------------------------------------------

std::vector<std::string> candidates_embedding(const model::TransformerModel& model,
                                              const text::Vocabulary& vocab,
                                              std::string_view word, int k) {
  const auto id = vocab.find(word);
  if (!id || text::is_special(*id) || k <= 0) return {};
  const auto& e = model.params().token_embedding;
  const Eigen::VectorXd q = e.row(*id).transpose();
  const double qn = q.norm();
  std::vector<std::pair<double, int>> scored;
  for (int t = text::kNumSpecials; t < std::min<int>(vocab.size(), e.rows()); ++t) {
    if (t == *id) continue;
    const double denom = qn * e.row(t).norm();
    const double c = denom > 0 ? e.row(t).dot(q) / denom : 0.0;
    scored.emplace_back(c, t);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (int i = 0; i < k && i < static_cast<int>(scored.size()); ++i) {
    out.push_back(vocab.token(scored[i].second));
  }
  return out;
}

// ---------------------------------------------------------------------------

void AttackConfig::validate() const {
  if (!(max_perturb_fraction > 0.0 && max_perturb_fraction <= 1.0)) {
    throw InputError("max_perturb_fraction must lie in (0, 1]");
  }
  if (candidates_per_word < 1) throw InputError("candidates_per_word must be at least 1");
  if (!(filter_threshold >= 0.0 && filter_threshold <= 1.0)) {
    throw InputError("filter_threshold must lie in [0, 1]");
  }
  if (shapley_permutations < 1) throw InputError("shapley_permutations must be at least 1");
}

int perturbation_budget(double fraction, int n_words) {
  return static_cast<int>(std::ceil(fraction * n_words - 1e-9));
}

namespace {

struct Candidate {
  std::string word;
  std::string op;
};

std::vector<Candidate> generate_candidates(const AttackResources& res, const Classifier& victim,
                                           const AttackConfig& config,
                                           const std::vector<std::string>& words, int pos,
                                           Rng& rng) {
  const std::string& word = words[pos];
  const int k = config.candidates_per_word;
  std::vector<Candidate> out;
  switch (config.method) {
    case AttackMethod::TextBugger: {
      for (auto op : {BugOp::Insert, BugOp::Delete, BugOp::Swap, BugOp::SubC}) {
        try {
          out.push_back({perturb_textbugger(word, op, rng, config.homoglyphs), to_string(op)});
        } catch (const WordTooShort&) {
        }
      }
      for (auto& w : candidates_embedding(res.model, res.vocab, word, k)) {
        out.push_back({std::move(w), to_string(BugOp::SubW)});
      }
      break;
    }
    case AttackMethod::TextFooler:
      for (auto& w : candidates_embedding(res.model, res.vocab, word, k)) {
        out.push_back({std::move(w), "embedding"});
      }
      break;
    case AttackMethod::WordNetTextFooler: {
      if (res.lexicon == nullptr) throw InputError("WordNetTextFooler needs a synonym lexicon");
      auto syn = candidates_lexicon(*res.lexicon, word);
      if (static_cast<int>(syn.size()) > k) syn.resize(k);
      for (auto& w : syn) out.push_back({std::move(w), "synonym"});
      break;
    }
    case AttackMethod::BertAttack: {
      std::vector<int> ids;
      for (const auto& w : words) ids.push_back(res.vocab.id(w));
      for (const auto& ts : victim.mlm(ids, pos, k)) {
        out.push_back({res.vocab.token(ts.token), "mlm"});
      }
      break;
    }
  }
  std::erase_if(out, [&](const Candidate& c) { return c.word == word || c.word.empty(); });
  return out;
}

}  // namespace

AttackOutcome run_attack(const AttackResources& res, const text::TokenizedText& text, int label,
                         const AttackConfig& config, const std::string& id) {
  config.validate();
  Classifier victim(res.model);
  AttackOutcome o;
  o.id = id;
  o.method = config.method;
  o.original = text;
  o.adversarial = text;
  o.label = label;

  const auto before = victim.predict(text.ids);
  o.pred_before = o.pred_after = before.label();
  o.conf_before = o.conf_after = before.probs(label);
  if (o.pred_before != label) {
    o.skipped = true;
    o.queries = victim.queries();
    return o;
  }

  ImportanceRanking ranking;
  switch (config.importance) {
    case ImportanceMethod::Masking:
      ranking = importance_masking(victim, text, label);
      break;
    case ImportanceMethod::Jacobian:
      ranking = importance_jacobian(victim, text, label);
      break;
    case ImportanceMethod::Shapley:
      ranking = importance_shapley(victim, text, label, config.shapley_permutations,
                                   mix_seed(config.seed, fnv1a(id)));
      break;
  }

  Rng rng(mix_seed(config.seed, fnv1a(id) ^ static_cast<std::uint64_t>(config.method)));
  const std::string original_text = text::detokenize(text);
  const int budget = perturbation_budget(config.max_perturb_fraction, static_cast<int>(text.size()));
  std::vector<std::string> words = text.words;
  double conf = o.conf_before;
  int pred = o.pred_before;
  double sim = 1.0;

  for (int pos : ranking.order) {
    if (static_cast<int>(o.perturbations.size()) >= budget || pred != o.pred_before) break;
    const auto candidates = generate_candidates(res, victim, config, words, pos, rng);
    std::optional<std::size_t> best;
    double best_conf = conf;
    int best_pred = pred;
    double best_sim = sim;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      std::vector<std::string> trial = words;
      trial[pos] = candidates[c].word;
      const std::string trial_text = text::join_words(trial);
      text::TokenizedText tok;
      try {
        tok = text::tokenize(trial_text, res.vocab);
      } catch (const InputError&) {
        continue;
      }
      if (tok.ids.size() + 1 > static_cast<std::size_t>(res.model.config().max_seq)) continue;
      const double s = res.similarity.raw_cosine(original_text, trial_text);
      if (s < config.filter_threshold) continue;
      const auto p = victim.predict(tok.ids);
      if (p.probs(label) < best_conf) {
        best = c;
        best_conf = p.probs(label);
        best_pred = p.label();
        best_sim = s;
      }
    }
    if (!best) continue;
    o.perturbations.push_back({pos, words[pos], candidates[*best].word, candidates[*best].op});
    words[pos] = candidates[*best].word;
    conf = best_conf;
    pred = best_pred;
    sim = best_sim;
  }

  o.adversarial = text::tokenize(text::join_words(words), res.vocab);
  o.pred_after = pred;
  o.conf_after = conf;
  o.similarity = sim;
  o.success = pred != o.pred_before && sim >= config.filter_threshold;
  o.queries = victim.queries();
  return o;
}

// ---------------------------------------------------------------------------

MethodSummary summarize(AttackMethod method, std::span<const AttackOutcome> outcomes) {
  MethodSummary s;
  s.method = method;
  s.n = static_cast<int>(outcomes.size());
  if (outcomes.empty()) return s;
  int clean_correct = 0;
  int attacked_correct = 0;
  long queries = 0;
  long perturbations = 0;
  for (const auto& o : outcomes) {
    clean_correct += o.pred_before == o.label;
    const int final_pred = o.success ? o.pred_after : o.pred_before;
    attacked_correct += final_pred == o.label;
    queries += o.queries;
    if (!o.skipped) {
      ++s.attempted;
      s.successes += o.success;
      perturbations += static_cast<long>(o.perturbations.size());
    }
  }
  const double n = s.n;
  s.clean_accuracy = clean_correct / n;
  s.attacked_accuracy = attacked_correct / n;
  s.delta_accuracy = s.clean_accuracy - s.attacked_accuracy;
  s.success_rate = s.attempted ? static_cast<double>(s.successes) / s.attempted : 0.0;
  s.mean_queries = queries / n;
  s.mean_perturbations =
      s.attempted ? static_cast<double>(perturbations) / s.attempted : 0.0;
  return s;
}

AttackReport evaluate_attacks(const AttackResources& res, std::span<const LabeledText> testset,
                              std::span<const AttackConfig> configs, int jobs) {
  AttackReport report;
  const std::size_t n = testset.size();
  std::vector<text::TokenizedText> texts(n);
  for (std::size_t i = 0; i < n; ++i) texts[i] = text::tokenize(testset[i].text, res.vocab);
  for (const auto& config : configs) {
    config.validate();
    std::vector<AttackOutcome> outcomes(n);
    parallel_for(n, jobs, [&](std::size_t i) {
      outcomes[i] = run_attack(res, texts[i], testset[i].label, config, testset[i].id);
    });
    report.rows.push_back(summarize(config.method, outcomes));
    for (auto& o : outcomes) report.outcomes.push_back(std::move(o));
  }
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const AttackOutcome& o) {
  nlohmann::json perts = nlohmann::json::array();
  for (const auto& p : o.perturbations) {
    perts.push_back({{"pos", p.position}, {"old", p.old_word}, {"new", p.new_word}, {"op", p.op}});
  }
  return {{"id", o.id},
          {"method", short_name(o.method)},
          {"original", text::detokenize(o.original)},
          {"adversarial", text::detokenize(o.adversarial)},
          {"label", o.label},
          {"pred_before", o.pred_before},
          {"pred_after", o.pred_after},
          {"conf_before", o.conf_before},
          {"conf_after", o.conf_after},
          {"perturbations", perts},
          {"success", o.success},
          {"skipped", o.skipped},
          {"similarity", o.similarity},
          {"queries", o.queries}};
}

AttackOutcome outcome_from_json(const nlohmann::json& j, const text::Vocabulary& vocab) {
  AttackOutcome o;
  try {
    o.id = j.at("id").get<std::string>();
    o.method = attack_method_from_string(j.value("method", std::string("tf")));
    o.original = text::tokenize(j.at("original").get<std::string>(), vocab);
    o.adversarial = text::tokenize(j.at("adversarial").get<std::string>(), vocab);
    o.label = j.at("label").get<int>();
    o.pred_before = j.at("pred_before").get<int>();
    o.pred_after = j.at("pred_after").get<int>();
    o.conf_before = j.at("conf_before").get<double>();
    o.conf_after = j.at("conf_after").get<double>();
    for (const auto& p : j.at("perturbations")) {
      o.perturbations.push_back({p.at("pos").get<int>(), p.at("old").get<std::string>(),
                                 p.at("new").get<std::string>(), p.at("op").get<std::string>()});
    }
    o.success = j.at("success").get<bool>();
    o.skipped = j.value("skipped", false);
    o.similarity = j.at("similarity").get<double>();
    o.queries = j.at("queries").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("attack outcome: ") + e.what());
  }
  return o;
}

std::string outcomes_to_jsonl(std::span<const AttackOutcome> outcomes) {
  std::string out;
  for (const auto& o : outcomes) {
    out += to_json(o).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<AttackOutcome> load_outcomes_jsonl(const std::filesystem::path& path,
                                               const text::Vocabulary& vocab) {
  std::istringstream in(read_file(path));
  std::vector<AttackOutcome> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(outcome_from_json(nlohmann::json::parse(line), vocab));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mc::attacks
