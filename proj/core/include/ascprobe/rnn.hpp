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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ascprobe/corpus.hpp"

namespace ascprobe::rnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 32;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 64;
  std::size_t max_seq_len = 0;  // T_max of the training corpus; informational
  double init_scale = 0.1;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// One LSTM layer. Gate blocks are stacked in the order input, forget,
/// output, candidate: rows [0,H) = i, [H,2H) = f, [2H,3H) = o, [3H,4H) = g.
struct LstmLayer {
  Matrix input_weights;      // 4H x In   (W)
  Matrix recurrent_weights;  // 4H x H    (U)
  Vector bias;               // 4H        (b)

  Eigen::Index hidden() const { return recurrent_weights.cols(); }
  Eigen::Index input() const { return input_weights.cols(); }
};

/// Every trainable tensor of the network. Used for both parameters and
/// gradients.
struct Tensors {
  Matrix embedding;  // V x E
  LstmLayer lstm1;
  LstmLayer lstm2;
  Matrix output_weights;  // H2 x V
  Vector output_bias;     // V

  /// fn(name, tensor) over all tensors in a fixed order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("embedding", embedding);
    fn("lstm1.W", lstm1.input_weights);
    fn("lstm1.U", lstm1.recurrent_weights);
    fn("lstm1.b", lstm1.bias);
    fn("lstm2.W", lstm2.input_weights);
    fn("lstm2.U", lstm2.recurrent_weights);
    fn("lstm2.b", lstm2.bias);
    fn("output.W", output_weights);
    fn("output.b", output_bias);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<Tensors*>(this)->for_each(
        [&](std::string_view name, const auto& t) { fn(name, t); });
  }

  /// Same shapes, all zeros.
  Tensors zeros_like() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  bool bitwise_equal(const Tensors& other) const;

  Tensors& operator+=(const Tensors& other);
  Tensors& operator*=(double scale);
  double squared_norm() const;
};

using Gradients = Tensors;

struct ModelParams : Tensors {
  ModelConfig config;
  /// Hash of the vocabulary file the model was trained with; empty if unknown.
  std::string vocab_fingerprint;
};

/// Seeded uniform [-init_scale, init_scale] weights; forget-gate biases 1,
/// every other bias 0.
ModelParams init_params(const ModelConfig& config);

struct CellOutput {
  Vector h;
  Vector c;
  Vector gates;  // post-activation [i; f; o; g]
};

/// c = f*c_prev + i*g, h = o*tanh(c).
CellOutput lstm_cell_step(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                          const LstmLayer& layer);

/// Per-timestep values of one sentence; column t is timestep t. At padded
/// steps the recurrent state is frozen at its previous value and the
/// embedding column is zero.
struct LayerActivations {
  Matrix embedding;  // E x T
  Matrix h1, c1;     // H1 x T
  Matrix h2, c2;     // H2 x T
  Matrix probs;      // V x T
  Matrix gates1;     // 4H1 x T (zero at padded steps)
  Matrix gates2;     // 4H2 x T
  std::vector<std::uint8_t> real;

  Eigen::Index steps() const { return probs.cols(); }
};

/// Throws TokenOutOfRange if a real token is outside [0, V).
LayerActivations forward(const ModelParams& params, std::span<const std::int32_t> tokens,
                         std::span<const std::uint8_t> mask);

inline constexpr double kProbabilityFloor = 1e-12;

/// Summed cross-entropy and the number of scored positions for one sentence.
/// Position t predicts token t+1 and is scored only when token t+1 is real.
struct LossTerms {
  double sum = 0.0;
  std::size_t count = 0;
};
LossTerms sentence_loss(const LayerActivations& acts, std::span<const std::int32_t> tokens,
                        std::span<const std::uint8_t> mask);

/// Masked mean cross-entropy over every scored position of the batch.
double loss(std::span<const LayerActivations> acts, const corpus::EncodedCorpus& batch);

/// Adds the gradient of sentence_loss(...).sum to `grads` (BPTT).
void accumulate_gradients(const ModelParams& params, std::span<const std::int32_t> tokens,
                          std::span<const std::uint8_t> mask, const LayerActivations& acts,
                          Gradients& grads);

/// Exact gradient of loss(acts, batch) with respect to every tensor.
Gradients backward(const ModelParams& params, const corpus::EncodedCorpus& batch,
                   std::span<const LayerActivations> acts);

struct BatchResult {
  double loss = 0.0;
  std::size_t count = 0;
  Gradients grads;
};

/// Forward + backward for rows of `data`. Sentences run in parallel; the
/// reduction is in row order so results are bitwise reproducible.
BatchResult loss_and_gradients(const ModelParams& params, const corpus::EncodedCorpus& data,
                               std::span<const std::size_t> rows);

enum class Optimizer : std::uint8_t { Sgd, Adam };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double perplexity = 0.0;
  std::size_t positions = 0;
};

/// accuracy: argmax p_t == target over scored positions;
/// perplexity: exp(masked mean cross-entropy).
Metrics evaluate(const ModelParams& params, const corpus::EncodedCorpus& data);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<Metrics> validation;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;

  std::vector<double> loss_curve() const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch training with global-norm gradient clipping. train_loss is the
/// token-weighted mean loss of the epoch's batches before each update.
/// Throws NonFiniteLoss naming the epoch and batch.
TrainResult train(ModelParams params, const corpus::EncodedCorpus& train_data,
                  const TrainConfig& config,
                  const corpus::EncodedCorpus* validation = nullptr,
                  const EpochCallback& on_epoch = {});

// ---- checkpoint ------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "ASCPCKPT", u32 version, u64 header length, JSON header
/// (config, vocab fingerprint, tensor manifest), then each tensor as
/// row-major little-endian float64.
std::string checkpoint_bytes(const ModelParams& params);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
/// Throws CheckpointMismatch on bad magic, version, or shape manifest.
ModelParams load_checkpoint(const std::filesystem::path& path);
ModelParams checkpoint_from_bytes(std::string_view bytes);

}  // namespace ascprobe::rnn
