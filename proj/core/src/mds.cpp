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
#include <limits>

#include "ascprobe/errors.hpp"
#include "ascprobe/geometry.hpp"

namespace ascprobe::geometry {

std::string_view method_name(Method m) { return m == Method::Mds ? "mds" : "tsne"; }

ProjectionResult classical_mds(const Matrix& distances, std::size_t out_dims) {
  const Index n = distances.rows();
  if (distances.cols() != n) throw InvalidPointSet("distance matrix must be square");
  if (!distances.allFinite()) throw InvalidPointSet("distance matrix must be finite");

  // Double centering of squared distances, built symmetric by construction.
  const Matrix sq = distances.array().square().matrix();
  const Vector row_mean = sq.rowwise().mean();
  const double grand_mean = row_mean.mean();
  Matrix b(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const double value = -0.5 * (0.5 * (sq(i, j) + sq(j, i)) - row_mean[i] - row_mean[j] + grand_mean);
      b(i, j) = value;
      b(j, i) = value;
    }
  }

  const auto k = static_cast<Index>(out_dims);
  ProjectionResult result;
  result.method = Method::Mds;
  result.coords = Matrix::Zero(n, k);
  MdsDiagnostics diag;
  diag.top_eigenvalues = Vector::Zero(k);
  if (n == 0) {
    result.mds = diag;
    return result;
  }

  const auto pairs = top_eigenpairs(b, out_dims);
  const Index available = pairs.vectors.cols();
  // Eigenvalues at roundoff level relative to the largest are treated as zero.
  const double largest = pairs.values.size() ? pairs.values.cwiseAbs().maxCoeff() : 0.0;
  const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * largest;
  double positive_total = 0.0;
  for (Index i = 0; i < pairs.values.size(); ++i) {
    if (pairs.values[i] > floor) positive_total += pairs.values[i];
  }
  double kept = 0.0;
  for (Index a = 0; a < k; ++a) {
    if (a >= available) {
      diag.nonpositive_axis = true;
      continue;
    }
    const double lambda = pairs.values[a];
    diag.top_eigenvalues[a] = lambda;
    if (!(lambda > floor)) {
      diag.nonpositive_axis = true;
      continue;
    }
    kept += lambda;
    Vector axis = pairs.vectors.col(a) * std::sqrt(lambda);
    const double scale = axis.cwiseAbs().maxCoeff();
    for (Index i = 0; i < n; ++i) {
      if (std::abs(axis[i]) > 1e-9 * scale) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
    result.coords.col(a) = axis;
  }
  diag.residual = positive_total > 0.0 ? 1.0 - kept / positive_total : 0.0;
  result.mds = diag;
  return result;
}

}  // namespace ascprobe::geometry
