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
#include <cstring>

#include "ascprobe/errors.hpp"
#include "ascprobe/parallel.hpp"
#include "ascprobe/rng.hpp"
#include "ascprobe/rnn.hpp"

namespace ascprobe::rnn {

using Eigen::Index;

void ModelConfig::validate() const {
  if (vocab_size < 3) throw InvalidConfig("vocab_size must be >= 3 (PAD, UNK, one word)");
  if (embedding_dim < 1 || hidden1 < 1 || hidden2 < 1) {
    throw InvalidConfig("embedding and hidden sizes must be >= 1");
  }
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
    throw InvalidConfig("init_scale must be positive");
  }
}

Tensors Tensors::zeros_like() const {
  Tensors out = *this;
  out.for_each([](std::string_view, auto& t) { t.setZero(); });
  return out;
}

std::size_t Tensors::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool Tensors::all_finite() const {
  bool ok = true;
  for_each([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

bool Tensors::bitwise_equal(const Tensors& other) const {
  std::vector<const double*> mine;
  std::vector<std::pair<const double*, Index>> theirs;
  for_each([&](std::string_view, const auto& t) { mine.push_back(t.data()); });
  other.for_each([&](std::string_view, const auto& t) { theirs.emplace_back(t.data(), t.size()); });
  bool same = mine.size() == theirs.size();
  std::size_t k = 0;
  for_each([&](std::string_view, const auto& t) {
    if (!same) return;
    same = t.size() == theirs[k].second &&
           std::memcmp(t.data(), theirs[k].first,
                       static_cast<std::size_t>(t.size()) * sizeof(double)) == 0;
    ++k;
  });
  return same;
}

Tensors& Tensors::operator+=(const Tensors& other) {
  std::vector<const double*> src;
  other.for_each([&](std::string_view, const auto& t) { src.push_back(t.data()); });
  std::size_t k = 0;
  for_each([&](std::string_view, auto& t) {
    const double* s = src[k++];
    double* d = t.data();
    for (Index i = 0; i < t.size(); ++i) d[i] += s[i];
  });
  return *this;
}

Tensors& Tensors::operator*=(double scale) {
  for_each([&](std::string_view, auto& t) { t *= scale; });
  return *this;
}

double Tensors::squared_norm() const {
  double total = 0.0;
  for_each([&](std::string_view, const auto& t) { total += t.squaredNorm(); });
  return total;
}

namespace {

LstmLayer make_layer(Index input, Index hidden) {
  return LstmLayer{Matrix::Zero(4 * hidden, input), Matrix::Zero(4 * hidden, hidden),
                   Vector::Zero(4 * hidden)};
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_tokens(const ModelParams& params, std::span<const std::int32_t> tokens,
                  std::span<const std::uint8_t> mask) {
  if (tokens.size() != mask.size()) {
    throw InvalidConfig("token row and mask row lengths differ");
  }
  const auto vocab = static_cast<std::int32_t>(params.config.vocab_size);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (mask[t] && (tokens[t] < 0 || tokens[t] >= vocab)) {
      throw TokenOutOfRange("token " + std::to_string(tokens[t]) + " at step " +
                            std::to_string(t) + " with vocabulary size " +
                            std::to_string(vocab));
    }
  }
}

}  // namespace

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  const auto V = static_cast<Index>(config.vocab_size);
  const auto E = static_cast<Index>(config.embedding_dim);
  const auto H1 = static_cast<Index>(config.hidden1);
  const auto H2 = static_cast<Index>(config.hidden2);

  ModelParams params;
  params.config = config;
  params.embedding = Matrix::Zero(V, E);
  params.lstm1 = make_layer(E, H1);
  params.lstm2 = make_layer(H1, H2);
  params.output_weights = Matrix::Zero(H2, V);
  params.output_bias = Vector::Zero(V);

  std::uint64_t stream = 0;
  auto fill = [&](Matrix& m) {
    Rng rng = Rng::derive(config.seed, stream++);
    // Row-major draw order so the values do not depend on storage order.
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        m(r, c) = rng.uniform(-config.init_scale, config.init_scale);
      }
    }
  };
  fill(params.embedding);
  fill(params.lstm1.input_weights);
  fill(params.lstm1.recurrent_weights);
  fill(params.lstm2.input_weights);
  fill(params.lstm2.recurrent_weights);
  fill(params.output_weights);
  params.lstm1.bias.segment(H1, H1).setOnes();
  params.lstm2.bias.segment(H2, H2).setOnes();
  return params;
}

CellOutput lstm_cell_step(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                          const LstmLayer& layer) {
  const Index H = layer.hidden();
  CellOutput out;
  out.gates.noalias() = layer.input_weights * x;
  out.gates.noalias() += layer.recurrent_weights * h_prev;
  out.gates += layer.bias;
  for (Index k = 0; k < 3 * H; ++k) out.gates[k] = sigmoid(out.gates[k]);
  for (Index k = 3 * H; k < 4 * H; ++k) out.gates[k] = std::tanh(out.gates[k]);
  const auto i = out.gates.segment(0, H);
  const auto f = out.gates.segment(H, H);
  const auto o = out.gates.segment(2 * H, H);
  const auto g = out.gates.segment(3 * H, H);
  out.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  out.h = o.cwiseProduct(out.c.array().tanh().matrix());
  return out;
}

LayerActivations forward(const ModelParams& params, std::span<const std::int32_t> tokens,
                         std::span<const std::uint8_t> mask) {
  check_tokens(params, tokens, mask);
  const auto T = static_cast<Index>(tokens.size());
  const Index E = params.embedding.cols();
  const Index H1 = params.lstm1.hidden();
  const Index H2 = params.lstm2.hidden();
  const Index V = params.output_bias.size();

  LayerActivations acts;
  acts.embedding = Matrix::Zero(E, T);
  acts.h1 = Matrix::Zero(H1, T);
  acts.c1 = Matrix::Zero(H1, T);
  acts.h2 = Matrix::Zero(H2, T);
  acts.c2 = Matrix::Zero(H2, T);
  acts.probs.resize(V, T);
  acts.gates1 = Matrix::Zero(4 * H1, T);
  acts.gates2 = Matrix::Zero(4 * H2, T);
  acts.real.assign(mask.begin(), mask.end());

  Vector h1 = Vector::Zero(H1), c1 = Vector::Zero(H1);
  Vector h2 = Vector::Zero(H2), c2 = Vector::Zero(H2);
  Vector logits(V);
  for (Index t = 0; t < T; ++t) {
    if (mask[static_cast<std::size_t>(t)]) {
      const Vector x = params.embedding.row(tokens[static_cast<std::size_t>(t)]).transpose();
      auto first = lstm_cell_step(x, h1, c1, params.lstm1);
      auto second = lstm_cell_step(first.h, h2, c2, params.lstm2);
      acts.embedding.col(t) = x;
      acts.gates1.col(t) = first.gates;
      acts.gates2.col(t) = second.gates;
      h1 = std::move(first.h);
      c1 = std::move(first.c);
      h2 = std::move(second.h);
      c2 = std::move(second.c);
    }
    acts.h1.col(t) = h1;
    acts.c1.col(t) = c1;
    acts.h2.col(t) = h2;
    acts.c2.col(t) = c2;

    logits.noalias() = params.output_weights.transpose() * h2;
    logits += params.output_bias;
    const double peak = logits.maxCoeff();
    logits = (logits.array() - peak).exp().matrix();
    logits /= logits.sum();
    acts.probs.col(t) = logits;
  }
  return acts;
}

LossTerms sentence_loss(const LayerActivations& acts, std::span<const std::int32_t> tokens,
                        std::span<const std::uint8_t> mask) {
  LossTerms terms;
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    if (!mask[t + 1]) continue;
    const double p = acts.probs(tokens[t + 1], static_cast<Index>(t));
    terms.sum -= std::log(std::max(p, kProbabilityFloor));
    ++terms.count;
  }
  return terms;
}

double loss(std::span<const LayerActivations> acts, const corpus::EncodedCorpus& batch) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const auto terms = sentence_loss(acts[i], batch.token_row(i), batch.mask_row(i));
    sum += terms.sum;
    count += terms.count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

namespace {

// Backward through one LSTM step. `dh` and `dc` hold the gradient arriving at
// h_t and c_t; on return they hold the gradient for h_{t-1} and c_{t-1}.
// Writes the pre-activation gate gradient into `dz`.
void cell_backward(const LstmLayer& layer, Eigen::Ref<const Vector> gates,
                   Eigen::Ref<const Vector> c, Eigen::Ref<const Vector> c_prev, Vector& dh,
                   Vector& dc, Eigen::Ref<Vector> dz) {
  const Index H = layer.hidden();
  const auto i = gates.segment(0, H).array();
  const auto f = gates.segment(H, H).array();
  const auto o = gates.segment(2 * H, H).array();
  const auto g = gates.segment(3 * H, H).array();
  const Eigen::ArrayXd tanh_c = c.array().tanh();

  const Eigen::ArrayXd dc_total = dc.array() + dh.array() * o * (1.0 - tanh_c.square());
  dz.segment(0, H) = (dc_total * g * i * (1.0 - i)).matrix();
  dz.segment(H, H) = (dc_total * c_prev.array() * f * (1.0 - f)).matrix();
  dz.segment(2 * H, H) = (dh.array() * tanh_c * o * (1.0 - o)).matrix();
  dz.segment(3 * H, H) = (dc_total * i * (1.0 - g.square())).matrix();

  dc = (dc_total * f).matrix();
  dh.noalias() = layer.recurrent_weights.transpose() * dz;
}

}  // namespace

void accumulate_gradients(const ModelParams& params, std::span<const std::int32_t> tokens,
                          std::span<const std::uint8_t> mask, const LayerActivations& acts,
                          Gradients& grads) {
  const auto T = static_cast<Index>(tokens.size());
  const Index E = params.embedding.cols();
  const Index H1 = params.lstm1.hidden();
  const Index H2 = params.lstm2.hidden();
  const Index V = params.output_bias.size();

  // Real and scored steps are packed into dense columns (latest first) so the
  // weight-gradient products see the same operands however much padding the
  // row carries.
  std::vector<Index> real_steps;
  std::vector<Index> scored_steps;
  for (Index t = T; t-- > 0;) {
    if (mask[static_cast<std::size_t>(t)]) real_steps.push_back(t);
    if (t + 1 < T && mask[static_cast<std::size_t>(t + 1)]) {
      const double p = acts.probs(tokens[static_cast<std::size_t>(t + 1)], t);
      if (p >= kProbabilityFloor) scored_steps.push_back(t);
    }
  }
  const auto n_real = static_cast<Index>(real_steps.size());
  const auto n_scored = static_cast<Index>(scored_steps.size());

  Matrix dlogits(V, n_scored);
  Matrix scored_h2(H2, n_scored);
  Matrix dz1(4 * H1, n_real), dz2(4 * H2, n_real);
  Matrix x1(E, n_real), hprev1(H1, n_real);
  Matrix x2(H1, n_real), hprev2(H2, n_real);
  Matrix dx1(E, n_real);

  Vector dh1 = Vector::Zero(H1), dc1 = Vector::Zero(H1);
  Vector dh2 = Vector::Zero(H2), dc2 = Vector::Zero(H2);
  const Vector zero1 = Vector::Zero(H1), zero2 = Vector::Zero(H2);

  Index real_k = 0;
  Index scored_k = 0;
  for (Index t = T; t-- > 0;) {
    if (scored_k < n_scored && scored_steps[static_cast<std::size_t>(scored_k)] == t) {
      auto d = dlogits.col(scored_k);
      d = acts.probs.col(t);
      d(tokens[static_cast<std::size_t>(t + 1)]) -= 1.0;
      scored_h2.col(scored_k) = acts.h2.col(t);
      dh2.noalias() += params.output_weights * d;
      ++scored_k;
    }
    if (!mask[static_cast<std::size_t>(t)]) {
      // Frozen step: h_t = h_{t-1}, c_t = c_{t-1}; gradients pass through.
      continue;
    }
    // Previous state is the most recent earlier column (zero at the start);
    // padded columns hold the frozen value, so column t-1 is always right.
    const auto h1_prev = t > 0 ? Vector(acts.h1.col(t - 1)) : zero1;
    const auto c1_prev = t > 0 ? Vector(acts.c1.col(t - 1)) : zero1;
    const auto h2_prev = t > 0 ? Vector(acts.h2.col(t - 1)) : zero2;
    const auto c2_prev = t > 0 ? Vector(acts.c2.col(t - 1)) : zero2;

    cell_backward(params.lstm2, acts.gates2.col(t), acts.c2.col(t), c2_prev, dh2, dc2,
                  dz2.col(real_k));
    x2.col(real_k) = acts.h1.col(t);
    hprev2.col(real_k) = h2_prev;

    dh1.noalias() += params.lstm2.input_weights.transpose() * dz2.col(real_k);
    cell_backward(params.lstm1, acts.gates1.col(t), acts.c1.col(t), c1_prev, dh1, dc1,
                  dz1.col(real_k));
    x1.col(real_k) = acts.embedding.col(t);
    hprev1.col(real_k) = h1_prev;
    dx1.col(real_k).noalias() = params.lstm1.input_weights.transpose() * dz1.col(real_k);
    ++real_k;
  }

  grads.output_weights.noalias() += scored_h2 * dlogits.transpose();
  grads.output_bias.noalias() += dlogits.rowwise().sum();
  grads.lstm2.input_weights.noalias() += dz2 * x2.transpose();
  grads.lstm2.recurrent_weights.noalias() += dz2 * hprev2.transpose();
  grads.lstm2.bias.noalias() += dz2.rowwise().sum();
  grads.lstm1.input_weights.noalias() += dz1 * x1.transpose();
  grads.lstm1.recurrent_weights.noalias() += dz1 * hprev1.transpose();
  grads.lstm1.bias.noalias() += dz1.rowwise().sum();
  for (Index k = 0; k < n_real; ++k) {
    const auto t = static_cast<std::size_t>(real_steps[static_cast<std::size_t>(k)]);
    grads.embedding.row(tokens[t]) += dx1.col(k).transpose();
  }
}

Gradients backward(const ModelParams& params, const corpus::EncodedCorpus& batch,
                   std::span<const LayerActivations> acts) {
  Gradients grads = params.zeros_like();
  std::size_t count = 0;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    accumulate_gradients(params, batch.token_row(i), batch.mask_row(i), acts[i], grads);
    count += sentence_loss(acts[i], batch.token_row(i), batch.mask_row(i)).count;
  }
  if (count > 0) grads *= 1.0 / static_cast<double>(count);
  return grads;
}

BatchResult loss_and_gradients(const ModelParams& params, const corpus::EncodedCorpus& data,
                               std::span<const std::size_t> rows) {
  std::vector<Gradients> per_sentence(rows.size());
  std::vector<LossTerms> terms(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const auto tokens = data.token_row(rows[k]);
    const auto mask = data.mask_row(rows[k]);
    const auto acts = forward(params, tokens, mask);
    terms[k] = sentence_loss(acts, tokens, mask);
    per_sentence[k] = params.zeros_like();
    accumulate_gradients(params, tokens, mask, acts, per_sentence[k]);
  });

  BatchResult result;
  result.grads = params.zeros_like();
  double sum = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    sum += terms[k].sum;
    result.count += terms[k].count;
    result.grads += per_sentence[k];
  }
  if (result.count > 0) {
    result.loss = sum / static_cast<double>(result.count);
    result.grads *= 1.0 / static_cast<double>(result.count);
  }
  return result;
}

}  // namespace ascprobe::rnn
