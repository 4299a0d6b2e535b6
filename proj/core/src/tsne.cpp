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
#include <limits>

#include "ascprobe/errors.hpp"
#include "ascprobe/geometry.hpp"
#include "ascprobe/parallel.hpp"
#include "ascprobe/rng.hpp"

namespace ascprobe::geometry {

namespace {

constexpr int kMaxCalibrationSteps = 100;

struct EntropyAt {
  double entropy;
  double weight_sum;
};

// Entropy (nats) of p_j ∝ exp(-beta * (d_j^2 - d_min^2)).
EntropyAt entropy_at(std::span<const double> shifted_sq, double beta) {
  double z = 0.0;
  double weighted = 0.0;
  for (double s : shifted_sq) {
    const double w = std::exp(-beta * s);
    z += w;
    weighted += w * s;
  }
  return {std::log(z) + beta * weighted / z, z};
}

}  // namespace

void TsneConfig::validate(std::size_t n_points) const {
  if (n_points < 4) throw InvalidPointSet("t-SNE needs at least 4 points");
  if (!(perplexity > 1.0)) throw InvalidConfig("perplexity must exceed 1");
  // The conditional distribution has n-1 outcomes, so its perplexity is at
  // most n-1.
  if (perplexity > static_cast<double>(n_points - 1)) {
    throw PerplexityTooHigh("perplexity " + std::to_string(perplexity) + " with " +
                            std::to_string(n_points) + " points");
  }
  if (iterations < 1) throw InvalidConfig("iterations must be >= 1");
  if (out_dims < 1) throw InvalidConfig("out_dims must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be positive");
  if (kl_every < 1) throw InvalidConfig("kl_every must be >= 1");
}

Calibration perplexity_calibration(std::span<const double> distances, double perplexity) {
  if (distances.size() < 2) throw InvalidPointSet("calibration needs at least two neighbors");
  const double target = std::log(perplexity);

  double d_min = std::numeric_limits<double>::infinity();
  for (double d : distances) d_min = std::min(d_min, d * d);
  std::vector<double> shifted(distances.size());
  double mean_shift = 0.0;
  for (std::size_t j = 0; j < distances.size(); ++j) {
    shifted[j] = distances[j] * distances[j] - d_min;
    mean_shift += shifted[j];
  }
  mean_shift /= static_cast<double>(shifted.size());

  // Entropy decreases monotonically in beta = 1 / (2 sigma^2).
  double beta = mean_shift > 0.0 ? 1.0 / mean_shift : 1.0;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  Calibration best;
  double best_error = std::numeric_limits<double>::infinity();
  for (int step = 1; step <= kMaxCalibrationSteps; ++step) {
    const auto at = entropy_at(shifted, beta);
    const double error = at.entropy - target;
    if (std::abs(error) < best_error) {
      best_error = std::abs(error);
      best.sigma = std::sqrt(0.5 / beta);
      best.entropy = at.entropy;
    }
    best.iterations = static_cast<std::size_t>(step);
    if (std::abs(error) < kEntropyTolerance) {
      best.converged = true;
      break;
    }
    if (error > 0.0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = lo == 0.0 ? beta * 0.5 : 0.5 * (beta + lo);
    }
  }
  return best;
}

std::vector<double> conditional_probabilities(std::span<const double> distances, double sigma) {
  double d_min = std::numeric_limits<double>::infinity();
  for (double d : distances) d_min = std::min(d_min, d * d);
  const double beta = 0.5 / (sigma * sigma);
  std::vector<double> p(distances.size());
  double z = 0.0;
  for (std::size_t j = 0; j < distances.size(); ++j) {
    p[j] = std::exp(-beta * (distances[j] * distances[j] - d_min));
    z += p[j];
  }
  for (auto& v : p) v /= z;
  return p;
}

ProjectionResult tsne(const Matrix& points, const TsneConfig& config) {
  const auto n = static_cast<std::size_t>(points.rows());
  config.validate(n);
  if (!points.allFinite()) throw InvalidPointSet("points must be finite");
  const auto dims = config.out_dims;

  TsneDiagnostics diag;
  const Matrix dist = pairwise_distances(points);

  // Symmetrized joint probabilities, row-major n x n.
  std::vector<double> cond(n * n, 0.0);
  std::vector<Calibration> calib(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> row;
    row.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(dist(static_cast<Index>(i), static_cast<Index>(j)));
    }
    calib[i] = perplexity_calibration(row, config.perplexity);
    const auto p = conditional_probabilities(row, calib[i].sigma);
    for (std::size_t j = 0, k = 0; j < n; ++j) {
      if (j != i) cond[i * n + j] = p[k++];
    }
  });
  const double target_entropy = std::log(config.perplexity);
  for (const auto& c : calib) {
    diag.max_entropy_error = std::max(diag.max_entropy_error, std::abs(c.entropy - target_entropy));
    if (!c.converged) ++diag.calibration_failures;
  }
  std::vector<double> joint(n * n, 0.0);
  const double norm = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (cond[i * n + j] + cond[j * n + i]) * norm;
      joint[i * n + j] = v;
      joint[j * n + i] = v;
    }
  }
  cond.clear();
  cond.shrink_to_fit();

  // Embedding state, row-major n x dims.
  std::vector<double> y(n * dims);
  if (config.init == TsneInit::Mds) {
    const auto mds = classical_mds(dist, dims);
    const double spread = std::sqrt(mds.coords.squaredNorm() / static_cast<double>(n * dims));
    const double scale = spread > 0.0 ? config.init_sigma / spread : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dims; ++d) {
        y[i * dims + d] = scale * mds.coords(static_cast<Index>(i), static_cast<Index>(d));
      }
    }
  } else {
    Rng rng(config.seed);
    for (auto& v : y) v = config.init_sigma * rng.normal();
  }
  std::vector<double> update(n * dims, 0.0);
  std::vector<double> gains(n * dims, 1.0);
  std::vector<double> grad(n * dims);
  std::vector<double> attract(n * dims);
  std::vector<double> repel(n * dims);

  auto kl_divergence = [&]() {
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double sq = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
          const double diff = y[i * dims + d] - y[j * dims + d];
          sq += diff * diff;
        }
        z += 2.0 / (1.0 + sq);
      }
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double p = joint[i * n + j];
        if (p <= 0.0) continue;
        double sq = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
          const double diff = y[i * dims + d] - y[j * dims + d];
          sq += diff * diff;
        }
        const double q = 1.0 / ((1.0 + sq) * z);
        kl += 2.0 * p * std::log(p / q);
      }
    }
    return kl;
  };

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const double exaggeration = iter < config.exaggeration_iters ? config.early_exaggeration : 1.0;
    const double momentum =
        iter < config.momentum_switch_iter ? config.initial_momentum : config.final_momentum;

    // grad_i = 4 * sum_j (x*P_ij - w_ij/Z) w_ij (y_i - y_j), w = 1/(1+|y_i-y_j|^2),
    // accumulated as attraction and Z-scaled repulsion in one pass.
    std::fill(attract.begin(), attract.end(), 0.0);
    std::fill(repel.begin(), repel.end(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* yi = &y[i * dims];
      for (std::size_t j = i + 1; j < n; ++j) {
        const double* yj = &y[j * dims];
        double sq = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
          const double diff = yi[d] - yj[d];
          sq += diff * diff;
        }
        const double w = 1.0 / (1.0 + sq);
        z += 2.0 * w;
        const double a = joint[i * n + j] * w;
        const double r = w * w;
        for (std::size_t d = 0; d < dims; ++d) {
          const double diff = yi[d] - yj[d];
          attract[i * dims + d] += a * diff;
          attract[j * dims + d] -= a * diff;
          repel[i * dims + d] += r * diff;
          repel[j * dims + d] -= r * diff;
        }
      }
    }
    for (std::size_t k = 0; k < n * dims; ++k) {
      grad[k] = 4.0 * (exaggeration * attract[k] - repel[k] / z);
      if (!std::isfinite(grad[k])) {
        throw NonFiniteGradient("iteration " + std::to_string(iter));
      }
    }
    for (std::size_t k = 0; k < n * dims; ++k) {
      const bool same_sign = (grad[k] > 0.0) == (update[k] > 0.0);
      gains[k] = same_sign ? std::max(gains[k] * 0.8, config.min_gain) : gains[k] + 0.2;
      update[k] = momentum * update[k] - config.learning_rate * gains[k] * grad[k];
      y[k] += update[k];
    }
    for (std::size_t d = 0; d < dims; ++d) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += y[i * dims + d];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) y[i * dims + d] -= mean;
    }

    const std::size_t done = iter + 1;
    if (done % config.kl_every == 0 || done == config.iterations) {
      diag.kl_history.push_back({done, kl_divergence()});
    }
  }

  diag.iterations = config.iterations;
  diag.final_kl = diag.kl_history.empty() ? 0.0 : diag.kl_history.back().kl;

  ProjectionResult result;
  result.method = Method::Tsne;
  result.coords.resize(static_cast<Index>(n), static_cast<Index>(dims));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      result.coords(static_cast<Index>(i), static_cast<Index>(d)) = y[i * dims + d];
    }
  }
  result.tsne = std::move(diag);
  return result;
}

}  // namespace ascprobe::geometry
