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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ascprobe::geometry {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

/// N points in D dimensions with labels in [0, L).
struct LabeledPointSet {
  Matrix points;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  /// Infers num_classes as max label + 1 and validates.
  static LabeledPointSet make(Matrix points, std::vector<std::size_t> labels);
  /// Throws InvalidPointSet: N >= 2, one label per point, every class
  /// non-empty, all values finite.
  void validate() const;
  std::vector<std::size_t> class_sizes() const;
};

// ---- GDV -------------------------------------------------------------------

struct ZScored {
  Matrix scaled;                  // N x D_eff, columns in input order
  std::vector<Index> kept;        // input column of each scaled column
  std::size_t dropped = 0;
};

/// s = (x - mean) / (2 * std) per dimension, population std. Dimensions whose
/// std is zero (or below 1e-12 of the column's magnitude) are dropped.
/// Throws AllDimensionsConstant, InvalidPointSet (N < 2).
ZScored zscore_half(const Matrix& points);

struct GdvResult {
  double gdv = 0.0;
  Vector intra;   // mean intra-class distance per class
  Matrix inter;   // L x L mean inter-class distances, zero diagonal
  std::size_t d_eff = 0;
  std::size_t dropped_dims = 0;
};

/// Generalized Discrimination Value on Euclidean distances between
/// half-z-scored points:
///   (1/sqrt(D_eff)) * [ mean_l intra(l) - mean_{l<m} inter(l, m) ].
/// Zero for overlapping classes, more negative for better separation.
/// Result is bitwise invariant to column order and to relabeling classes.
/// Throws UndefinedIntraClass if a class has fewer than two points, and
/// InvalidPointSet if L < 2.
GdvResult gdv(const LabeledPointSet& data);

// ---- distances / eigen -----------------------------------------------------

/// Euclidean distance matrix; exactly symmetric with zero diagonal.
Matrix pairwise_distances(const Matrix& points);

struct Eigenpairs {
  Vector values;   // all eigenvalues, descending
  Matrix vectors;  // n x k, unit columns for the k largest
};

/// Largest-k eigenpairs of a symmetric matrix: Householder reduction to
/// tridiagonal form, implicit-shift QL for the spectrum, then inverse
/// iteration on the tridiagonal matrix for the requested vectors.
/// Throws EigenFailure if QL does not converge.
Eigenpairs top_eigenpairs(const Matrix& symmetric, std::size_t k);

/// Eigenvalues of the symmetric tridiagonal matrix (diag, offdiag), ascending.
Vector tridiagonal_eigenvalues(Vector diag, Vector offdiag);

// ---- projections -----------------------------------------------------------

enum class Method : std::uint8_t { Mds, Tsne };
std::string_view method_name(Method m);

struct MdsDiagnostics {
  Vector top_eigenvalues;
  /// 1 - (sum of kept positive eigenvalues) / (sum of all positive ones).
  double residual = 0.0;
  bool nonpositive_axis = false;
};

struct KlCheckpoint {
  std::size_t iteration = 0;
  double kl = 0.0;
};

struct TsneDiagnostics {
  double final_kl = 0.0;
  std::size_t iterations = 0;
  std::vector<KlCheckpoint> kl_history;
  double max_entropy_error = 0.0;
  std::size_t calibration_failures = 0;
};

struct ProjectionResult {
  Matrix coords;  // N x out_dims
  Method method = Method::Mds;
  std::optional<MdsDiagnostics> mds;
  std::optional<TsneDiagnostics> tsne;
};

/// Torgerson scaling: B = -1/2 J D^2 J, coordinates are the top eigenvectors
/// times sqrt(eigenvalue). Axes with eigenvalue <= 0 are zero and flagged.
/// Each axis is sign-canonicalized so its first non-negligible loading is
/// positive.
ProjectionResult classical_mds(const Matrix& distances, std::size_t out_dims = 2);

enum class TsneInit : std::uint8_t { Random, Mds };

struct TsneConfig {
  double perplexity = 100.0;
  std::size_t out_dims = 2;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch_iter = 250;
  double min_gain = 0.01;
  std::uint64_t seed = 0;
  TsneInit init = TsneInit::Random;
  double init_sigma = 1e-4;
  std::size_t kl_every = 50;

  /// Throws PerplexityTooHigh / InvalidPointSet for the given point count.
  void validate(std::size_t n_points) const;
};

struct Calibration {
  double sigma = 0.0;
  double entropy = 0.0;  // nats
  std::size_t iterations = 0;
  bool converged = false;
};

inline constexpr double kEntropyTolerance = 1e-5;

/// Gaussian bandwidth for one point so the entropy of its conditional
/// neighbor distribution equals log(perplexity). `distances` are Euclidean
/// distances to the other points. Bisection, at most 100 steps; returns the
/// best bandwidth with converged=false if the tolerance is not reached.
Calibration perplexity_calibration(std::span<const double> distances, double perplexity);

/// Conditional probabilities p(j|i) for the given bandwidth (p(i|i) excluded).
std::vector<double> conditional_probabilities(std::span<const double> distances, double sigma);

/// Exact t-SNE. Deterministic for a fixed seed.
/// Throws PerplexityTooHigh, NonFiniteGradient.
ProjectionResult tsne(const Matrix& points, const TsneConfig& config);

}  // namespace ascprobe::geometry
