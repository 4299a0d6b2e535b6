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

#include "ascprobe/errors.hpp"
#include "ascprobe/probe.hpp"
#include "test_support.hpp"

namespace ascprobe::probe {
namespace {

corpus::EncodedCorpus small_corpus(corpus::PaddingSide side = corpus::PaddingSide::Post) {
  const corpus::Corpus c = corpus::generate_corpus(corpus::default_grammar(), 4, 12);
  return corpus::encode(c, std::make_shared<const corpus::Vocabulary>(corpus::build_vocab(c)),
                        side);
}

rnn::ModelParams model_for(const corpus::EncodedCorpus& enc) {
  rnn::ModelConfig cfg;
  cfg.vocab_size = enc.vocab->size();
  cfg.embedding_dim = 5;
  cfg.hidden1 = 6;
  cfg.hidden2 = 7;
  cfg.seed = 3;
  return rnn::init_params(cfg);
}

TEST(ProbeTest, LayerNamesRoundTrip) {
  for (LayerId l : kAllLayers) EXPECT_EQ(parse_layer(layer_name(l)), l);
  EXPECT_THROW(parse_layer("lstm3"), DomainError);
  EXPECT_EQ(parse_pooling("mean"), Pooling::Mean);
  EXPECT_THROW(parse_pooling("max"), DomainError);
}

TEST(ProbeTest, LastAndMeanPooling) {
  rnn::LayerActivations acts;
  acts.h1 = Eigen::MatrixXd(2, 4);
  acts.h1 << 1, 2, 3, 9,  //
      4, 5, 6, 9;
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0};
  const Eigen::VectorXd last = sentence_representation(acts, mask, LayerId::Lstm1, Pooling::Last);
  const Eigen::VectorXd mean = sentence_representation(acts, mask, LayerId::Lstm1, Pooling::Mean);
  EXPECT_EQ(last, Eigen::Vector2d(3, 6));
  EXPECT_EQ(mean, Eigen::Vector2d(2, 5));
  const std::vector<std::uint8_t> empty = {0, 0, 0, 0};
  EXPECT_THROW(sentence_representation(acts, empty, LayerId::Lstm1, Pooling::Last),
               EmptySentence);
}

TEST(ProbeTest, TablesHaveDeclaredShapes) {
  const auto enc = small_corpus();
  const auto params = model_for(enc);
  const auto tables = extract_all(params, enc, PoolingScheme::standard(), "", "abc");
  ASSERT_EQ(tables.size(), 4u);
  for (const auto& [layer, t] : tables) {
    EXPECT_EQ(t.values.rows(), static_cast<Eigen::Index>(enc.rows));
    EXPECT_EQ(t.values.cols(), layer_dim(params.config, layer));
    EXPECT_TRUE(t.values.allFinite());
    EXPECT_EQ(t.labels, enc.labels);
    EXPECT_EQ(t.checkpoint_hash, "abc");
    for (auto n : t.label_histogram()) EXPECT_EQ(n, 12u);
  }
  EXPECT_EQ(tables.at(LayerId::Embedding).pooling, Pooling::Mean);
  EXPECT_EQ(tables.at(LayerId::Lstm2).pooling, Pooling::Last);
  for (Eigen::Index i = 0; i < tables.at(LayerId::Output).values.rows(); ++i) {
    EXPECT_NEAR(tables.at(LayerId::Output).values.row(i).sum(), 1.0, 1e-9);
  }
}

TEST(ProbeTest, RowsMatchDirectForward) {
  const auto enc = small_corpus();
  const auto params = model_for(enc);
  const auto tables = extract_all(params, enc, PoolingScheme::uniform(Pooling::Last));
  for (std::size_t i : {0u, 17u, 47u}) {
    const auto acts = rnn::forward(params, enc.token_row(i), enc.mask_row(i));
    const auto last = static_cast<Eigen::Index>(enc.length(i) - 1);
    const auto row = static_cast<Eigen::Index>(i);
    EXPECT_EQ(tables.at(LayerId::Lstm2).values.row(row).transpose(), acts.h2.col(last));
    EXPECT_EQ(tables.at(LayerId::Output).values.row(row).transpose(), acts.probs.col(last));
  }
}

TEST(ProbeTest, PaddingSideDoesNotChangeRepresentations) {
  const auto post = small_corpus(corpus::PaddingSide::Post);
  const auto pre = small_corpus(corpus::PaddingSide::Pre);
  const auto params = model_for(post);
  const auto a = extract_all(params, post, PoolingScheme::standard());
  const auto b = extract_all(params, pre, PoolingScheme::standard());
  for (LayerId l : kAllLayers) EXPECT_EQ(a.at(l).values, b.at(l).values);
}

TEST(ProbeTest, VocabMismatch) {
  const auto enc = small_corpus();
  auto params = model_for(enc);
  params.vocab_fingerprint = "aaaa";
  EXPECT_THROW(extract_all(params, enc, PoolingScheme::standard(), "bbbb"), VocabMismatch);
  EXPECT_NO_THROW(extract_all(params, enc, PoolingScheme::standard(), "aaaa"));

  rnn::ModelConfig cfg = params.config;
  cfg.vocab_size += 1;
  EXPECT_THROW(extract_all(rnn::init_params(cfg), enc, PoolingScheme::standard()),
               VocabMismatch);
}

TEST(ProbeTest, TableFilesRoundTrip) {
  const auto dir = test::scratch_dir("probe_io");
  const auto enc = small_corpus();
  const auto tables = extract_all(model_for(enc), enc, PoolingScheme::standard(), "", "hash1");
  const auto& t = tables.at(LayerId::Lstm1);
  write_table(dir / "lstm1", t);
  const ActivationTable back = read_table(dir / "lstm1");
  EXPECT_EQ(back.layer, t.layer);
  EXPECT_EQ(back.values, t.values);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.pooling, t.pooling);
  EXPECT_EQ(back.checkpoint_hash, "hash1");
  EXPECT_TRUE(std::filesystem::exists(dir / "lstm1.json"));
  EXPECT_THROW(read_table(dir / "nothing"), IoError);
}

}  // namespace
}  // namespace ascprobe::probe
