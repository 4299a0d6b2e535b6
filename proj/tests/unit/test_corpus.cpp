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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "ascprobe/corpus.hpp"
#include "ascprobe/errors.hpp"
#include "test_support.hpp"

namespace ascprobe::corpus {
namespace {

using test::scratch_dir;

GrammarSpec tiny_grammar() {
  GrammarSpec spec = default_grammar();
  spec.at(Construction::Transitive).slots = {
      {Slot::Subject, {"the cat", "the dog"}},
      {Slot::Verb, {"saw", "heard"}},
      {Slot::Object, {"the bird", "the fish"}},
  };
  return spec;
}

TEST(GrammarTest, DefaultGrammarIsValid) { EXPECT_NO_THROW(default_grammar().validate()); }

TEST(GrammarTest, DefaultGrammarMeetsLexiconMinimums) {
  const GrammarSpec spec = default_grammar();
  for (Construction c : kAllConstructions) {
    const auto& t = spec.at(c);
    EXPECT_GE(t.fillers_for(Slot::Subject)->size(), 12u);
    EXPECT_GE(t.fillers_for(Slot::Verb)->size(), 10u);
    EXPECT_GE(t.fillers_for(Slot::Object)->size(), 12u);
  }
  EXPECT_GE(spec.at(Construction::CausedMotion).fillers_for(Slot::Path)->size(), 8u);
  EXPECT_GE(spec.at(Construction::Resultative).fillers_for(Slot::State)->size(), 8u);
}

TEST(GrammarTest, ReferenceExamplesAreRealizable) {
  const GrammarSpec spec = default_grammar();
  const auto examples = reference_examples();
  for (Construction c : kAllConstructions) {
    const std::string& want = examples[index_of(c)];
    const std::uint64_t n = spec.at(c).combination_count();
    bool found = false;
    for (std::uint64_t i = 0; i < n && !found; ++i) {
      found = join_words(realize(spec, c, i)) == want;
    }
    EXPECT_TRUE(found) << want;
  }
}

TEST(GrammarTest, TemplatesFollowConstructionStructure) {
  GrammarSpec spec = default_grammar();
  auto& slots = spec.at(Construction::Ditransitive).slots;
  std::swap(slots[2], slots[3]);
  EXPECT_THROW(spec.validate(), InvalidGrammar);

  spec = default_grammar();
  spec.at(Construction::CausedMotion).slots.pop_back();
  EXPECT_THROW(spec.validate(), InvalidGrammar);
}

TEST(GrammarTest, RejectsEmptyAndDuplicateFillers) {
  GrammarSpec spec = default_grammar();
  spec.at(Construction::Transitive).slots[2].fillers.clear();
  EXPECT_THROW(spec.validate(), InvalidGrammar);

  spec = default_grammar();
  spec.at(Construction::Transitive).slots[2].fillers.push_back("A Cake.");
  EXPECT_THROW(spec.validate(), InvalidGrammar);
}

TEST(GrammarTest, UndeclaredSharedVerbIsRejected) {
  GrammarSpec spec = default_grammar();
  spec.at(Construction::Ditransitive).slots[1].fillers.push_back("dragged");
  EXPECT_THROW(spec.validate(), InvalidGrammar);
  spec.shared_verbs.push_back("dragged");
  EXPECT_NO_THROW(spec.validate());
}

TEST(GrammarTest, JsonRoundTrip) {
  const GrammarSpec spec = default_grammar();
  const std::string text = grammar_to_json(spec);
  const GrammarSpec back = grammar_from_json(text);
  EXPECT_EQ(grammar_to_json(back), text);
  EXPECT_THROW(grammar_from_json("{\"constructions\": 3}"), DomainError);
  EXPECT_THROW(grammar_from_json("not json"), DomainError);
}

TEST(GrammarTest, DefinitePolicyPrependsDeterminer) {
  GrammarSpec spec = tiny_grammar();
  spec.at(Construction::Transitive).slots = {
      {Slot::Subject, {"cat"}}, {Slot::Verb, {"saw"}}, {Slot::Object, {"bird"}}};
  spec.determiner_policy = DeterminerPolicy::Definite;
  EXPECT_EQ(join_words(realize(spec, Construction::Transitive, 0)), "the cat saw the bird");
}

TEST(TokenizeTest, LowercasesAndStripsTerminalPunctuation) {
  EXPECT_EQ(tokenize("The Cat chased the mouse."),
            (std::vector<std::string>{"the", "cat", "chased", "the", "mouse"}));
  EXPECT_EQ(tokenize("  Hello,   world!  "), (std::vector<std::string>{"hello", "world"}));
  EXPECT_TRUE(tokenize(" ... ").empty());
}

TEST(GenerateTest, DefaultCorpusHas500PerClass) {
  const Corpus c = generate_corpus(default_grammar(), 7, 500);
  EXPECT_EQ(c.size(), 2000u);
  for (auto n : c.counts()) EXPECT_EQ(n, 500u);
}

TEST(GenerateTest, ZeroPerClassGivesEmptyCorpus) {
  const Corpus c = generate_corpus(default_grammar(), 7, 0);
  EXPECT_TRUE(c.empty());
}

TEST(GenerateTest, InsufficientCombinations) {
  EXPECT_EQ(tiny_grammar().at(Construction::Transitive).combination_count(), 8u);
  EXPECT_NO_THROW(generate_corpus(tiny_grammar(), 1, 8));
  EXPECT_THROW(generate_corpus(tiny_grammar(), 1, 9), InsufficientCombinations);
}

TEST(GenerateTest, PropertiesAcrossSeeds) {
  const GrammarSpec spec = default_grammar();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 1 + (seed * 37) % 300;
    const Corpus a = generate_corpus(spec, seed, n);
    const Corpus b = generate_corpus(spec, seed, n);
    EXPECT_EQ(a.sentences, b.sentences) << "seed " << seed;
    const auto counts = a.counts();
    EXPECT_EQ(*std::max_element(counts.begin(), counts.end()),
              *std::min_element(counts.begin(), counts.end()));
    std::set<std::pair<Construction, std::string>> seen;
    for (const auto& s : a.sentences) {
      EXPECT_TRUE(seen.emplace(s.label, join_words(s.words)).second) << join_words(s.words);
    }
  }
}

TEST(GenerateTest, DifferentSeedsDiffer) {
  const GrammarSpec spec = default_grammar();
  EXPECT_NE(generate_corpus(spec, 1, 50).sentences, generate_corpus(spec, 2, 50).sentences);
}

TEST(VocabTest, RepeatedWordCountedOnce) {
  Corpus c;
  c.sentences.push_back({tokenize("the cat chased the mouse"), Construction::Transitive});
  const Vocabulary v = build_vocab(c);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.word(Vocabulary::kPadId), "<pad>");
  EXPECT_EQ(v.word(Vocabulary::kUnkId), "<unk>");
}

TEST(VocabTest, EmptyCorpusThrows) { EXPECT_THROW(build_vocab(Corpus{}), EmptyCorpus); }

TEST(VocabTest, SizeMatchesDistinctWordsOfCorpusFile) {
  const auto dir = scratch_dir("vocab");
  const Corpus c = generate_corpus(default_grammar(), 7, 500);
  write_corpus_jsonl(dir / "corpus.jsonl", c);
  // Oracle: distinct words counted from the written file.
  std::set<std::string> words;
  for (const auto& s : read_corpus_jsonl(dir / "corpus.jsonl").sentences) {
    words.insert(s.words.begin(), s.words.end());
  }
  EXPECT_EQ(build_vocab(c).size(), words.size() + 2);
}

TEST(VocabTest, IndependentOfSentenceOrder) {
  Corpus a = generate_corpus(default_grammar(), 3, 40);
  Corpus b = a;
  std::reverse(b.sentences.begin(), b.sentences.end());
  EXPECT_EQ(build_vocab(a), build_vocab(b));
  EXPECT_EQ(vocab_to_json(build_vocab(a)), vocab_to_json(build_vocab(b)));
}

TEST(VocabTest, IdsAreBijective) {
  const Vocabulary v = build_vocab(generate_corpus(default_grammar(), 3, 100));
  for (std::int32_t id = Vocabulary::kFirstWordId; id < static_cast<std::int32_t>(v.size()); ++id) {
    EXPECT_EQ(v.id(v.word(id)), id);
  }
  EXPECT_EQ(v.id("zebra-never-seen"), Vocabulary::kUnkId);
}

TEST(EncodeTest, PostPaddingAndMask) {
  Corpus c;
  c.sentences.push_back({tokenize("the cat chased the mouse"), Construction::Transitive});
  c.sentences.push_back(
      {tokenize("the cat chased the mouse into garden"), Construction::CausedMotion});
  auto vocab = std::make_shared<const Vocabulary>(build_vocab(c));
  const EncodedCorpus enc = encode(c, vocab);
  ASSERT_EQ(enc.max_len, 7u);
  const auto row = enc.token_row(0);
  const std::vector<std::int32_t> want = {vocab->id("the"), vocab->id("cat"),
                                          vocab->id("chased"), vocab->id("the"),
                                          vocab->id("mouse"), 0, 0};
  EXPECT_EQ(std::vector<std::int32_t>(row.begin(), row.end()), want);
  const auto mask = enc.mask_row(0);
  EXPECT_EQ(std::vector<std::uint8_t>(mask.begin(), mask.end()),
            (std::vector<std::uint8_t>{1, 1, 1, 1, 1, 0, 0}));
  const auto longest = enc.mask_row(1);
  EXPECT_EQ(std::count(longest.begin(), longest.end(), 0), 0);
}

TEST(EncodeTest, UnknownWordsMapToUnk) {
  Corpus train;
  train.sentences.push_back({tokenize("the cat sat"), Construction::Transitive});
  Corpus other;
  other.sentences.push_back({tokenize("the dog sat"), Construction::Transitive});
  const EncodedCorpus enc = encode(other, std::make_shared<const Vocabulary>(build_vocab(train)));
  EXPECT_EQ(enc.token_row(0)[1], Vocabulary::kUnkId);
  EXPECT_EQ(enc.unk_count, 1u);
}

TEST(EncodeTest, RoundTripAndMaskConsistency) {
  const Corpus c = generate_corpus(default_grammar(), 11, 200);
  auto vocab = std::make_shared<const Vocabulary>(build_vocab(c));
  for (PaddingSide side : {PaddingSide::Post, PaddingSide::Pre}) {
    const EncodedCorpus enc = encode(c, vocab, side);
    for (std::size_t i = 0; i < enc.rows; ++i) {
      EXPECT_EQ(decode_row(enc, i), c.sentences[i].words);
      EXPECT_EQ(enc.length(i), c.sentences[i].words.size());
      const auto tokens = enc.token_row(i);
      const auto mask = enc.mask_row(i);
      for (std::size_t t = 0; t < enc.max_len; ++t) {
        EXPECT_EQ(mask[t] == 0, tokens[t] == Vocabulary::kPadId);
      }
    }
  }
}

TEST(SplitTest, StratifiedNinetyTen) {
  const Corpus c = generate_corpus(default_grammar(), 7, 500);
  const EncodedCorpus enc = encode(c, std::make_shared<const Vocabulary>(build_vocab(c)));
  const auto [train, val] = split(enc, 0.9, 1);
  EXPECT_EQ(train.rows, 1800u);
  EXPECT_EQ(val.rows, 200u);
  for (auto n : train.counts()) EXPECT_EQ(n, 450u);
  for (auto n : val.counts()) EXPECT_EQ(n, 50u);
}

TEST(SplitTest, DeterministicPartitionCoversInput) {
  const Corpus c = generate_corpus(default_grammar(), 7, 100);
  const EncodedCorpus enc = encode(c, std::make_shared<const Vocabulary>(build_vocab(c)));
  const auto [a1, b1] = split(enc, 0.5, 1);
  const auto [a2, b2] = split(enc, 0.5, 1);
  EXPECT_EQ(a1.tokens, a2.tokens);
  EXPECT_EQ(b1.tokens, b2.tokens);

  std::multiset<std::vector<std::string>> all, parts;
  for (std::size_t i = 0; i < enc.rows; ++i) all.insert(decode_row(enc, i));
  for (std::size_t i = 0; i < a1.rows; ++i) parts.insert(decode_row(a1, i));
  for (std::size_t i = 0; i < b1.rows; ++i) parts.insert(decode_row(b1, i));
  EXPECT_EQ(all, parts);
}

TEST(SplitTest, ClassStarvationThrows) {
  Corpus c;
  for (Construction k : kAllConstructions) c.sentences.push_back({{"w"}, k});
  const EncodedCorpus enc = encode(c, std::make_shared<const Vocabulary>(build_vocab(c)));
  EXPECT_THROW(split(enc, 0.1, 1), DegenerateSplit);
}

TEST(CorpusIoTest, FilesRoundTrip) {
  const auto dir = scratch_dir("corpus_io");
  const Corpus c = generate_corpus(default_grammar(), 5, 30);
  write_corpus_jsonl(dir / "corpus.jsonl", c);
  EXPECT_EQ(read_corpus_jsonl(dir / "corpus.jsonl").sentences, c.sentences);
  const std::string text = test::read_file(dir / "corpus.jsonl");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 120);

  const Vocabulary v = build_vocab(c);
  write_vocab_json(dir / "vocab.json", v);
  EXPECT_EQ(read_vocab_json(dir / "vocab.json"), v);
  EXPECT_THROW(read_corpus_jsonl(dir / "missing.jsonl"), IoError);
}

}  // namespace
}  // namespace ascprobe::corpus
