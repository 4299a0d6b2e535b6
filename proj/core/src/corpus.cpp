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

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "ascprobe/corpus.hpp"
#include "ascprobe/errors.hpp"
#include "ascprobe/rng.hpp"

namespace ascprobe::corpus {

namespace {

bool takes_determiner(Slot s) {
  return s == Slot::Subject || s == Slot::Object || s == Slot::Recipient;
}

const std::string kPadWord = "<pad>";
const std::string kUnkWord = "<unk>";

}  // namespace

std::array<std::size_t, kNumConstructions> Corpus::counts() const {
  std::array<std::size_t, kNumConstructions> out{};
  for (const auto& s : sentences) ++out[index_of(s.label)];
  return out;
}

std::vector<std::string> realize(const GrammarSpec& spec, Construction c,
                                 std::uint64_t index) {
  const auto& slots = spec.at(c).slots;
  std::vector<std::size_t> digits(slots.size());
  for (std::size_t k = slots.size(); k-- > 0;) {
    const std::uint64_t radix = slots[k].fillers.size();
    digits[k] = static_cast<std::size_t>(index % radix);
    index /= radix;
  }
  std::vector<std::string> words;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (spec.determiner_policy == DeterminerPolicy::Definite &&
        takes_determiner(slots[k].slot)) {
      for (auto& w : tokenize(spec.determiner)) words.push_back(std::move(w));
    }
    for (auto& w : tokenize(slots[k].fillers[digits[k]])) words.push_back(std::move(w));
  }
  return words;
}

Corpus generate_corpus(const GrammarSpec& spec, std::uint64_t seed,
                       std::size_t n_per_class) {
  spec.validate();
  Corpus corpus;
  corpus.seed = seed;
  for (Construction c : kAllConstructions) {
    const std::uint64_t space = spec.at(c).combination_count();
    if (space < n_per_class) {
      throw InsufficientCombinations(std::string(label_name(c)) + " has " +
                                     std::to_string(space) + " combinations, " +
                                     std::to_string(n_per_class) + " requested");
    }
  }
  corpus.sentences.reserve(n_per_class * kNumConstructions);

  for (Construction c : kAllConstructions) {
    const std::uint64_t space = spec.at(c).combination_count();
    // Lazy Fisher-Yates over [0, space): positions not yet touched hold
    // their own index, so only swapped entries are stored.
    Rng rng = Rng::derive(seed, index_of(c));
    std::unordered_map<std::uint64_t, std::uint64_t> moved;
    auto slot_value = [&](std::uint64_t pos) {
      auto it = moved.find(pos);
      return it == moved.end() ? pos : it->second;
    };
    std::unordered_set<std::string> seen;
    std::size_t produced = 0;
    for (std::uint64_t i = 0; i < space && produced < n_per_class; ++i) {
      const std::uint64_t j = i + rng.below(space - i);
      const std::uint64_t pick = slot_value(j);
      moved[j] = slot_value(i);
      moved.erase(i);
      auto words = realize(spec, c, pick);
      // Distinct combinations can still collide as word strings.
      if (!seen.insert(join_words(words)).second) continue;
      corpus.sentences.push_back(Sentence{std::move(words), c});
      ++produced;
    }
    if (produced < n_per_class) {
      throw InsufficientCombinations(std::string(label_name(c)) + " yields only " +
                                     std::to_string(produced) + " distinct sentences");
    }
  }
  return corpus;
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  std::sort(words_.begin(), words_.end());
  words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    index_.emplace(words_[i], static_cast<std::int32_t>(i) + kFirstWordId);
  }
}

std::int32_t Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

const std::string& Vocabulary::word(std::int32_t id) const {
  if (id == kPadId) return kPadWord;
  if (id == kUnkId) return kUnkWord;
  if (id < kFirstWordId || static_cast<std::size_t>(id) >= size()) {
    throw TokenOutOfRange("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(size()));
  }
  return words_[static_cast<std::size_t>(id - kFirstWordId)];
}

Vocabulary build_vocab(const Corpus& corpus) {
  if (corpus.empty()) throw EmptyCorpus("cannot build a vocabulary from zero sentences");
  std::set<std::string> distinct;
  for (const auto& s : corpus.sentences) distinct.insert(s.words.begin(), s.words.end());
  return Vocabulary(std::vector<std::string>(distinct.begin(), distinct.end()));
}

std::size_t EncodedCorpus::length(std::size_t i) const {
  std::size_t n = 0;
  for (auto m : mask_row(i)) n += m;
  return n;
}

std::array<std::size_t, kNumConstructions> EncodedCorpus::counts() const {
  std::array<std::size_t, kNumConstructions> out{};
  for (auto l : labels) ++out[index_of(l)];
  return out;
}

EncodedCorpus encode(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab,
                     PaddingSide padding) {
  EncodedCorpus out;
  out.rows = corpus.size();
  out.vocab = std::move(vocab);
  out.padding = padding;
  for (const auto& s : corpus.sentences) out.max_len = std::max(out.max_len, s.words.size());
  out.tokens.assign(out.rows * out.max_len, Vocabulary::kPadId);
  out.mask.assign(out.rows * out.max_len, 0);
  out.labels.reserve(out.rows);
  for (std::size_t i = 0; i < out.rows; ++i) {
    const auto& s = corpus.sentences[i];
    const std::size_t offset =
        padding == PaddingSide::Post ? 0 : out.max_len - s.words.size();
    for (std::size_t t = 0; t < s.words.size(); ++t) {
      const std::int32_t id = out.vocab->id(s.words[t]);
      if (id == Vocabulary::kUnkId) ++out.unk_count;
      out.tokens[i * out.max_len + offset + t] = id;
      out.mask[i * out.max_len + offset + t] = 1;
    }
    out.labels.push_back(s.label);
  }
  return out;
}

std::vector<std::string> decode_row(const EncodedCorpus& encoded, std::size_t i) {
  std::vector<std::string> words;
  const auto tokens = encoded.token_row(i);
  const auto mask = encoded.mask_row(i);
  for (std::size_t t = 0; t < encoded.max_len; ++t) {
    if (mask[t]) words.push_back(encoded.vocab->word(tokens[t]));
  }
  return words;
}

EncodedCorpus select_rows(const EncodedCorpus& encoded,
                          std::span<const std::size_t> indices) {
  EncodedCorpus out;
  out.rows = indices.size();
  out.max_len = encoded.max_len;
  out.vocab = encoded.vocab;
  out.padding = encoded.padding;
  out.tokens.reserve(out.rows * out.max_len);
  out.mask.reserve(out.rows * out.max_len);
  for (std::size_t i : indices) {
    const auto t = encoded.token_row(i);
    const auto m = encoded.mask_row(i);
    out.tokens.insert(out.tokens.end(), t.begin(), t.end());
    out.mask.insert(out.mask.end(), m.begin(), m.end());
    out.labels.push_back(encoded.labels[i]);
  }
  return out;
}

std::pair<EncodedCorpus, EncodedCorpus> split(const EncodedCorpus& encoded,
                                              double train_fraction,
                                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DegenerateSplit("train fraction must lie strictly between 0 and 1");
  }
  std::array<std::vector<std::size_t>, kNumConstructions> by_class;
  for (std::size_t i = 0; i < encoded.rows; ++i) {
    by_class[index_of(encoded.labels[i])].push_back(i);
  }
  std::vector<std::uint8_t> in_train(encoded.rows, 0);
  for (Construction c : kAllConstructions) {
    auto& members = by_class[index_of(c)];
    if (members.empty()) continue;
    const auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) * train_fraction + 0.5));
    if (n_train == 0 || n_train == members.size()) {
      throw DegenerateSplit(std::string(label_name(c)) + " with " +
                            std::to_string(members.size()) +
                            " sentences leaves one side empty");
    }
    Rng rng = Rng::derive(seed, index_of(c));
    rng.shuffle(members);
    for (std::size_t k = 0; k < n_train; ++k) in_train[members[k]] = 1;
  }
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t i = 0; i < encoded.rows; ++i) {
    (in_train[i] ? train_rows : val_rows).push_back(i);
  }
  return {select_rows(encoded, train_rows), select_rows(encoded, val_rows)};
}

}  // namespace ascprobe::corpus
