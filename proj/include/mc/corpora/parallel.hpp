// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_CORPORA_PARALLEL_HPP_
#define MC_CORPORA_PARALLEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mc/corpora/minilang.hpp"
#include "mc/model/transformer.hpp"
#include "mc/text/text.hpp"

namespace mc::corpora {

enum class Variant { Syncretic, Inflectional, Plain };

std::string to_string(Variant v);
// Throws ParseError.
Variant variant_from_string(const std::string& s);

// Clean/corrupted pair differing in exactly one word.
struct ParallelExample {
  std::string id;
  text::TokenizedText clean;
  text::TokenizedText corrupted;
  int label = 0;
  Variant variant = Variant::Syncretic;
  int substituted_position = 0;
};

struct ParallelDataset {
  std::vector<ParallelExample> examples;
  Variant variant = Variant::Syncretic;
  std::string provenance;
  int skipped = 0;
};

// Throws AlignmentError listing every example whose token counts differ or
// whose texts differ in other than exactly one position; ParseError on
// duplicate ids or mixed variants.
void validate(const ParallelDataset& dataset);

// Replaces each eligible sentence's original noun by its syncretic synonym
// (Syncretic), by its regular synonym in the template's slot (Inflectional),
// or, for plain-register sentences, by the base form of a seeded choice of
// synonym (Plain). Ineligible sentences are skipped and counted.
ParallelDataset build_parallel(const std::vector<Sentence>& corpus, const MiniLexicon& lexicon,
                               const text::Vocabulary& vocab, Variant variant,
                               std::uint64_t seed);

struct FilterResult {
  ParallelDataset dataset;
  double retention = 0.0;
};

// Keeps the pairs whose predicted class differs between clean and corrupted.
FilterResult filter_prediction_changed(const model::TransformerModel& model,
                                       const ParallelDataset& dataset);

// JSONL lines {id, clean_text, corrupted_text, label, variant?}. Labels are
// integers in [0, n_classes) or "negative"/"positive". Throws ParseError,
// AlignmentError (naming every offending line), or UnknownLabel.
ParallelDataset load_parallel_jsonl(const std::filesystem::path& path,
                                    const text::Vocabulary& vocab, int n_classes = 2);
ParallelDataset parse_parallel_jsonl(std::string_view content, const text::Vocabulary& vocab,
                                     int n_classes = 2, const std::string& source = "<memory>");
std::string to_jsonl(const ParallelDataset& dataset);
void save_parallel_jsonl(const ParallelDataset& dataset, const std::filesystem::path& path);

// Stable content hash of the pairs, used to tag edge scores.
std::string fingerprint(const ParallelDataset& dataset);

}  // namespace mc::corpora

#endif  // MC_CORPORA_PARALLEL_HPP_
