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

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ascprobe/corpus.hpp"
#include "ascprobe/rnn.hpp"

namespace ascprobe::probe {

enum class LayerId : std::uint8_t { Embedding = 1, Lstm1 = 2, Lstm2 = 3, Output = 4 };
inline constexpr std::array<LayerId, 4> kAllLayers = {LayerId::Embedding, LayerId::Lstm1,
                                                      LayerId::Lstm2, LayerId::Output};

/// "embedding" | "lstm1" | "lstm2" | "output"
std::string_view layer_name(LayerId layer);
LayerId parse_layer(std::string_view name);

enum class Pooling : std::uint8_t {
  Last,  // vector at the final real timestep
  Mean,  // masked mean over real timesteps
};
std::string_view pooling_name(Pooling p);
Pooling parse_pooling(std::string_view name);

struct PoolingScheme {
  std::array<Pooling, 4> per_layer{};

  /// Last state for the recurrent and output layers, mean for the embedding.
  static PoolingScheme standard();
  static PoolingScheme uniform(Pooling p);
  Pooling at(LayerId layer) const {
    return per_layer[static_cast<std::size_t>(layer) - 1];
  }
  Pooling& at(LayerId layer) { return per_layer[static_cast<std::size_t>(layer) - 1]; }
};

struct ActivationTable {
  LayerId layer = LayerId::Embedding;
  Eigen::MatrixXd values;  // N x D, row i = corpus sentence i
  std::vector<corpus::Construction> labels;
  Pooling pooling = Pooling::Last;
  std::string checkpoint_hash;

  std::array<std::size_t, corpus::kNumConstructions> label_histogram() const;
};

/// Layer dimension: E, H1, H2 or V.
Eigen::Index layer_dim(const rnn::ModelConfig& config, LayerId layer);

/// One vector per sentence. Recurrent layers use hidden states h; the output
/// layer uses the softmax distribution. Throws EmptySentence.
Eigen::VectorXd sentence_representation(const rnn::LayerActivations& acts,
                                        std::span<const std::uint8_t> mask, LayerId layer,
                                        Pooling pooling);

/// Four tables aligned row-for-row with `encoded`. Throws VocabMismatch when
/// the model and corpus vocabularies differ (size, or fingerprint when both
/// are known).
std::map<LayerId, ActivationTable> extract_all(const rnn::ModelParams& params,
                                               const corpus::EncodedCorpus& encoded,
                                               const PoolingScheme& pooling,
                                               const std::string& vocab_fingerprint = {},
                                               const std::string& checkpoint_hash = {});

/// Writes <stem>.bin (checkpoint-style container) and <stem>.json manifest.
void write_table(const std::filesystem::path& stem, const ActivationTable& table);
ActivationTable read_table(const std::filesystem::path& stem);

}  // namespace ascprobe::probe
