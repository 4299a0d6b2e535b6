/* Copyright 2026 The ascprobe Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ascprobe::corpus {

enum class Construction : std::uint8_t {
  Transitive = 0,
  Ditransitive = 1,
  CausedMotion = 2,
  Resultative = 3,
};
inline constexpr std::size_t kNumConstructions = 4;
inline constexpr std::array<Construction, kNumConstructions> kAllConstructions = {
    Construction::Transitive, Construction::Ditransitive,
    Construction::CausedMotion, Construction::Resultative};

/// "transitive" | "ditransitive" | "caused_motion" | "resultative"
std::string_view label_name(Construction c);
/// Inverse of label_name; throws DomainError on anything else.
Construction parse_label(std::string_view name);
inline std::size_t index_of(Construction c) { return static_cast<std::size_t>(c); }

enum class Slot : std::uint8_t { Subject, Verb, Object, Recipient, Path, State };
std::string_view slot_name(Slot s);
Slot parse_slot(std::string_view name);

enum class DeterminerPolicy : std::uint8_t {
  Literal,   // fillers are complete phrases, used verbatim
  Definite,  // determiner is prepended to subject/object/recipient fillers
};

struct SlotFillers {
  Slot slot;
  std::vector<std::string> fillers;
};

/// Ordered slot sequence for one construction; each slot carries its own
/// filler list so lexicons can differ between constructions.
struct ConstructionTemplate {
  std::vector<SlotFillers> slots;

  /// Number of distinct filler combinations (saturates at UINT64_MAX).
  std::uint64_t combination_count() const;
  const std::vector<std::string>* fillers_for(Slot s) const;
};

struct GrammarSpec {
  std::array<ConstructionTemplate, kNumConstructions> templates;
  DeterminerPolicy determiner_policy = DeterminerPolicy::Literal;
  std::string determiner = "the";
  /// Verbs allowed to appear in more than one construction's verb list.
  std::vector<std::string> shared_verbs;

  const ConstructionTemplate& at(Construction c) const { return templates[index_of(c)]; }
  ConstructionTemplate& at(Construction c) { return templates[index_of(c)]; }

  /// Throws InvalidGrammar when a template does not realize its construction's
  /// structure, a slot list is empty or has duplicates, or a verb is shared
  /// without being declared in shared_verbs.
  void validate() const;
};

/// Built-in lexicon; its combination space contains the four reference
/// example sentences (see reference_examples()).
GrammarSpec default_grammar();

/// Lowercased, punctuation-stripped reference sentence per construction.
std::array<std::string, kNumConstructions> reference_examples();

/// Lowercase, strip trailing punctuation from every token, split on whitespace.
std::vector<std::string> tokenize(std::string_view text);
std::string join_words(std::span<const std::string> words);

struct Sentence {
  std::vector<std::string> words;
  Construction label;

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::uint64_t seed = 0;

  std::array<std::size_t, kNumConstructions> counts() const;
  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

/// Realizes the template's combination `index` (mixed radix over slots, last
/// slot fastest) as a word list.
std::vector<std::string> realize(const GrammarSpec& spec, Construction c,
                                 std::uint64_t index);

/// Balanced, duplicate-free corpus: n_per_class sentences per construction,
/// drawn uniformly without replacement from the combination space. Sentences
/// are grouped by construction in kAllConstructions order.
Corpus generate_corpus(const GrammarSpec& spec, std::uint64_t seed,
                       std::size_t n_per_class);

class Vocabulary {
 public:
  static constexpr std::int32_t kPadId = 0;
  static constexpr std::int32_t kUnkId = 1;
  static constexpr std::int32_t kFirstWordId = 2;

  Vocabulary() = default;
  /// Words are deduplicated and sorted; ids follow sorted order from 2.
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size() + kFirstWordId; }
  /// UNK for unknown words.
  std::int32_t id(std::string_view word) const;
  bool contains(std::string_view word) const;
  /// "<pad>" / "<unk>" for the reserved ids.
  const std::string& word(std::int32_t id) const;
  /// Non-reserved words in id order.
  const std::vector<std::string>& words() const { return words_; }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Sorted distinct corpus words + PAD + UNK. Throws EmptyCorpus.
Vocabulary build_vocab(const Corpus& corpus);

enum class PaddingSide : std::uint8_t { Post, Pre };

struct EncodedCorpus {
  std::size_t rows = 0;
  std::size_t max_len = 0;             // T_max
  std::vector<std::int32_t> tokens;    // rows x max_len, row-major
  std::vector<std::uint8_t> mask;      // 1 = real token, 0 = PAD
  std::vector<Construction> labels;
  std::shared_ptr<const Vocabulary> vocab;
  PaddingSide padding = PaddingSide::Post;
  std::size_t unk_count = 0;           // out-of-vocabulary tokens seen by encode

  std::span<const std::int32_t> token_row(std::size_t i) const {
    return {tokens.data() + i * max_len, max_len};
  }
  std::span<const std::uint8_t> mask_row(std::size_t i) const {
    return {mask.data() + i * max_len, max_len};
  }
  std::size_t length(std::size_t i) const;
  std::array<std::size_t, kNumConstructions> counts() const;
};

/// Word-id matrix padded to the longest sentence; unknown words map to UNK.
EncodedCorpus encode(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab,
                     PaddingSide padding = PaddingSide::Post);
/// Real tokens of row i mapped back to words (PAD stripped).
std::vector<std::string> decode_row(const EncodedCorpus& encoded, std::size_t i);

/// Rows [indices...] of `encoded`, in the given order, same width.
EncodedCorpus select_rows(const EncodedCorpus& encoded, std::span<const std::size_t> indices);

/// Stratified split: each class contributes round(n_c * train_fraction) rows
/// to the first part. Both parts keep the input's relative row order.
/// Throws DegenerateSplit if any class would be empty on either side.
std::pair<EncodedCorpus, EncodedCorpus> split(const EncodedCorpus& encoded,
                                              double train_fraction,
                                              std::uint64_t seed);

// ---- files ---------------------------------------------------------------

/// JSON Lines: {"text": "...", "label": "..."} per sentence, LF endings.
std::string corpus_to_jsonl(const Corpus& corpus);
void write_corpus_jsonl(const std::filesystem::path& path, const Corpus& corpus);
Corpus read_corpus_jsonl(const std::filesystem::path& path);

/// {"pad_id":0,"unk_id":1,"words":[...]} with index+2 = id.
std::string vocab_to_json(const Vocabulary& vocab);
void write_vocab_json(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocab_json(const std::filesystem::path& path);

std::string grammar_to_json(const GrammarSpec& spec);
GrammarSpec grammar_from_json(std::string_view text);
GrammarSpec read_grammar_json(const std::filesystem::path& path);

}  // namespace ascprobe::corpus
