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

#include "test_support.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace ascprobe::test {

namespace fs = std::filesystem;
using Eigen::Index;

Eigen::MatrixXd random_matrix(Rng& rng, Index rows, Index cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

rnn::ModelParams tiny_model(std::size_t vocab, std::size_t e, std::size_t h1, std::size_t h2,
                            std::uint64_t seed, double init_scale) {
  rnn::ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embedding_dim = e;
  cfg.hidden1 = h1;
  cfg.hidden2 = h2;
  cfg.init_scale = init_scale;
  cfg.seed = seed;
  auto params = rnn::init_params(cfg);
  // Nonzero biases exercise every gradient path.
  Rng rng = Rng::derive(seed, 1000);
  for (auto* b : {&params.lstm1.bias, &params.lstm2.bias, &params.output_bias}) {
    for (Index i = 0; i < b->size(); ++i) (*b)[i] += rng.uniform(-init_scale, init_scale);
  }
  return params;
}

corpus::EncodedCorpus random_batch(Rng& rng, std::size_t vocab, std::size_t rows,
                                   std::size_t min_len, std::size_t max_len) {
  corpus::EncodedCorpus enc;
  enc.rows = rows;
  enc.max_len = max_len;
  enc.tokens.assign(rows * max_len, corpus::Vocabulary::kPadId);
  enc.mask.assign(rows * max_len, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t len = min_len + rng.below(max_len - min_len + 1);
    for (std::size_t t = 0; t < len; ++t) {
      enc.tokens[i * max_len + t] = static_cast<std::int32_t>(2 + rng.below(vocab - 2));
      enc.mask[i * max_len + t] = 1;
    }
    enc.labels.push_back(corpus::kAllConstructions[i % corpus::kNumConstructions]);
  }
  return enc;
}

void scalar_lstm_step(const rnn::LstmLayer& layer, const std::vector<double>& x,
                      std::vector<double>& h, std::vector<double>& c) {
  const auto H = static_cast<std::size_t>(layer.hidden());
  const auto In = static_cast<std::size_t>(layer.input());
  auto pre = [&](std::size_t row) {
    double s = layer.bias[static_cast<Index>(row)];
    for (std::size_t k = 0; k < In; ++k) {
      s += layer.input_weights(static_cast<Index>(row), static_cast<Index>(k)) * x[k];
    }
    for (std::size_t k = 0; k < H; ++k) {
      s += layer.recurrent_weights(static_cast<Index>(row), static_cast<Index>(k)) * h[k];
    }
    return s;
  };
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> h_new(H), c_new(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double i_gate = sig(pre(j));
    const double f_gate = sig(pre(H + j));
    const double o_gate = sig(pre(2 * H + j));
    const double g_gate = std::tanh(pre(3 * H + j));
    c_new[j] = f_gate * c[j] + i_gate * g_gate;
    h_new[j] = o_gate * std::tanh(c_new[j]);
  }
  h = std::move(h_new);
  c = std::move(c_new);
}

double batch_loss(const rnn::ModelParams& params, const corpus::EncodedCorpus& batch) {
  std::vector<rnn::LayerActivations> acts;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    acts.push_back(rnn::forward(params, batch.token_row(i), batch.mask_row(i)));
  }
  return rnn::loss(acts, batch);
}

GradientCheck check_gradients(const rnn::ModelParams& params,
                              const corpus::EncodedCorpus& batch, double eps) {
  std::vector<rnn::LayerActivations> acts;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    acts.push_back(rnn::forward(params, batch.token_row(i), batch.mask_row(i)));
  }
  const rnn::Gradients grads = rnn::backward(params, batch, acts);

  std::vector<std::pair<std::string, const double*>> analytic;
  grads.for_each([&](std::string_view name, const auto& t) {
    analytic.emplace_back(std::string(name), t.data());
  });

  GradientCheck result;
  rnn::ModelParams probe = params;
  std::size_t k = 0;
  probe.for_each([&](std::string_view, auto& t) {
    const double* a = analytic[k].second;
    for (Index i = 0; i < t.size(); ++i) {
      const double saved = t.data()[i];
      t.data()[i] = saved + eps;
      const double plus = batch_loss(probe, batch);
      t.data()[i] = saved - eps;
      const double minus = batch_loss(probe, batch);
      t.data()[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double denom = std::max({std::abs(a[i]), std::abs(numeric), 1e-6});
      const double rel = std::abs(a[i] - numeric) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = analytic[k].first;
      }
      ++result.checked;
    }
    ++k;
  });
  return result;
}

double procrustes_rms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::RowVectorXd ma = a.colwise().mean();
  const Eigen::RowVectorXd mb = b.colwise().mean();
  const Eigen::MatrixXd ca = a.rowwise() - ma;
  const Eigen::MatrixXd cb = b.rowwise() - mb;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cb.transpose() * ca,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
  const Eigen::MatrixXd diff = cb * rotation - ca;
  return std::sqrt(diff.squaredNorm() / static_cast<double>(a.rows()));
}

double knn_purity(const Eigen::MatrixXd& coords, const std::vector<std::size_t>& labels,
                  std::size_t k) {
  const Index n = coords.rows();
  std::size_t same = 0;
  std::vector<std::pair<double, Index>> order;
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) order.emplace_back((coords.row(i) - coords.row(j)).squaredNorm(), j);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end());
    for (std::size_t q = 0; q < k; ++q) {
      if (labels[static_cast<std::size_t>(order[q].second)] ==
          labels[static_cast<std::size_t>(i)]) {
        ++same;
      }
    }
  }
  return static_cast<double>(same) / static_cast<double>(static_cast<std::size_t>(n) * k);
}

geometry::LabeledPointSet gaussian_blobs(Rng& rng, std::size_t classes, std::size_t per_class,
                                         Index dims, double separation) {
  const auto n = static_cast<Index>(classes * per_class);
  Eigen::MatrixXd points(n, dims);
  std::vector<std::size_t> labels;
  for (Index i = 0; i < n; ++i) {
    const std::size_t c = static_cast<std::size_t>(i) / per_class;
    for (Index d = 0; d < dims; ++d) {
      points(i, d) = rng.normal() + (d == static_cast<Index>(c) ? separation : 0.0);
    }
    labels.push_back(c);
  }
  return geometry::LabeledPointSet::make(std::move(points), std::move(labels));
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("ascprobe_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CommandResult run_command(const std::string& command) {
  CommandResult result;
  std::FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return result;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace ascprobe::test
