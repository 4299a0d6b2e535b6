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

#include <cmath>
#include <numeric>

#include "ascprobe/errors.hpp"
#include "ascprobe/parallel.hpp"
#include "ascprobe/rng.hpp"
#include "ascprobe/rnn.hpp"

namespace ascprobe::rnn {

using Eigen::Index;

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  // A zero rate is accepted: it is the identity update.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidConfig("learning_rate must be finite and non-negative");
  }
  if (!(clip_norm > 0.0)) throw InvalidConfig("clip_norm must be positive");
  if (optimizer == Optimizer::Adam &&
      !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw InvalidConfig("adam betas must lie in [0,1) and epsilon must be positive");
  }
}

std::vector<double> TrainResult::loss_curve() const {
  std::vector<double> out;
  out.reserve(history.size());
  for (const auto& e : history) out.push_back(e.train_loss);
  return out;
}

Metrics evaluate(const ModelParams& params, const corpus::EncodedCorpus& data) {
  std::vector<LossTerms> terms(data.rows);
  std::vector<std::size_t> hits(data.rows, 0);
  parallel_for(data.rows, [&](std::size_t i) {
    const auto tokens = data.token_row(i);
    const auto mask = data.mask_row(i);
    const auto acts = forward(params, tokens, mask);
    terms[i] = sentence_loss(acts, tokens, mask);
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
      if (!mask[t + 1]) continue;
      Index best = 0;
      acts.probs.col(static_cast<Index>(t)).maxCoeff(&best);
      if (best == tokens[t + 1]) ++hits[i];
    }
  });
  Metrics m;
  double sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    sum += terms[i].sum;
    m.positions += terms[i].count;
    correct += hits[i];
  }
  if (m.positions > 0) {
    m.loss = sum / static_cast<double>(m.positions);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.positions);
  }
  m.perplexity = std::exp(m.loss);
  return m;
}

namespace {

class AdamState {
 public:
  AdamState(const Tensors& shape, const TrainConfig& cfg)
      : m_(shape.zeros_like()), v_(shape.zeros_like()), cfg_(cfg) {}

  void step(Tensors& params, const Tensors& grads) {
    ++t_;
    const double correction1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::vector<const double*> g;
    std::vector<double*> m;
    std::vector<double*> v;
    grads.for_each([&](std::string_view, const auto& x) { g.push_back(x.data()); });
    m_.for_each([&](std::string_view, auto& x) { m.push_back(x.data()); });
    v_.for_each([&](std::string_view, auto& x) { v.push_back(x.data()); });
    std::size_t k = 0;
    params.for_each([&](std::string_view, auto& p) {
      double* pd = p.data();
      for (Index j = 0; j < p.size(); ++j) {
        const double gj = g[k][j];
        m[k][j] = cfg_.beta1 * m[k][j] + (1.0 - cfg_.beta1) * gj;
        v[k][j] = cfg_.beta2 * v[k][j] + (1.0 - cfg_.beta2) * gj * gj;
        const double m_hat = m[k][j] / correction1;
        const double v_hat = v[k][j] / correction2;
        pd[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
      }
      ++k;
    });
  }

 private:
  Tensors m_;
  Tensors v_;
  TrainConfig cfg_;
  std::uint64_t t_ = 0;
};

void sgd_step(Tensors& params, const Tensors& grads, double lr) {
  std::vector<const double*> g;
  grads.for_each([&](std::string_view, const auto& x) { g.push_back(x.data()); });
  std::size_t k = 0;
  params.for_each([&](std::string_view, auto& p) {
    double* pd = p.data();
    for (Index j = 0; j < p.size(); ++j) pd[j] -= lr * g[k][j];
    ++k;
  });
}

}  // namespace

TrainResult train(ModelParams params, const corpus::EncodedCorpus& train_data,
                  const TrainConfig& config, const corpus::EncodedCorpus* validation,
                  const EpochCallback& on_epoch) {
  config.validate();
  params.config.validate();
  if (train_data.rows == 0) throw EmptyCorpus("training corpus has no sentences");

  TrainResult result;
  AdamState adam(params, config);
  std::vector<std::size_t> order(train_data.rows);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::derive(config.shuffle_seed, epoch);
    rng.shuffle(order);

    double epoch_sum = 0.0;
    std::size_t epoch_count = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      auto batch = loss_and_gradients(params, train_data, rows);
      if (!std::isfinite(batch.loss) || !batch.grads.all_finite()) {
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      epoch_sum += batch.loss * static_cast<double>(batch.count);
      epoch_count += batch.count;
      if (batch.count == 0) continue;

      const double norm = std::sqrt(batch.grads.squared_norm());
      if (norm > config.clip_norm) batch.grads *= config.clip_norm / norm;
      if (config.optimizer == Optimizer::Adam) {
        adam.step(params, batch.grads);
      } else {
        sgd_step(params, batch.grads, config.learning_rate);
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_count ? epoch_sum / static_cast<double>(epoch_count) : 0.0;
    if (validation != nullptr && validation->rows > 0) record.validation = evaluate(params, *validation);
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace ascprobe::rnn
