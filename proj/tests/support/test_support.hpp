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
#include <string>
#include <vector>

#include "ascprobe/corpus.hpp"
#include "ascprobe/geometry.hpp"
#include "ascprobe/rng.hpp"
#include "ascprobe/rnn.hpp"

namespace ascprobe::test {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                              double scale = 1.0);

/// Small model with weights drawn in [-init_scale, init_scale].
rnn::ModelParams tiny_model(std::size_t vocab, std::size_t e, std::size_t h1, std::size_t h2,
                            std::uint64_t seed, double init_scale = 0.5);

/// Random rows over word ids [2, vocab) with lengths in [min_len, max_len],
/// post-padded to width max_len. Labels cycle through the constructions.
corpus::EncodedCorpus random_batch(Rng& rng, std::size_t vocab, std::size_t rows,
                                   std::size_t min_len, std::size_t max_len);

/// Plain scalar-loop LSTM step (gate order i, f, o, g).
void scalar_lstm_step(const rnn::LstmLayer& layer, const std::vector<double>& x,
                      std::vector<double>& h, std::vector<double>& c);

/// Masked mean next-word cross-entropy of a batch.
double batch_loss(const rnn::ModelParams& params, const corpus::EncodedCorpus& batch);

struct GradientCheck {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

/// Central differences on every scalar parameter; relative error is
/// |a - n| / max(|a|, |n|, 1e-6).
GradientCheck check_gradients(const rnn::ModelParams& params,
                              const corpus::EncodedCorpus& batch, double eps = 1e-5);

/// RMS residual after the best rotation/reflection and translation of `b`
/// onto `a`.
double procrustes_rms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Fraction of each point's k nearest neighbors that share its label.
double knn_purity(const Eigen::MatrixXd& coords, const std::vector<std::size_t>& labels,
                  std::size_t k);

/// Isotropic Gaussian blobs centered at `separation` * e_c.
geometry::LabeledPointSet gaussian_blobs(Rng& rng, std::size_t classes, std::size_t per_class,
                                         Eigen::Index dims, double separation);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr
};
CommandResult run_command(const std::string& command);

}  // namespace ascprobe::test
