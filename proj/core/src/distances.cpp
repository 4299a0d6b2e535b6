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

#include "ascprobe/errors.hpp"
#include "ascprobe/geometry.hpp"
#include "ascprobe/parallel.hpp"

namespace ascprobe::geometry {

Matrix pairwise_distances(const Matrix& points) {
  if (!points.allFinite()) throw InvalidPointSet("points must be finite");
  const Index n = points.rows();
  // Row-major copy so each distance walks contiguous memory.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = points;
  Matrix out = Matrix::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ui) {
    const auto i = static_cast<Index>(ui);
    for (Index j = i + 1; j < n; ++j) {
      double sum = 0.0;
      for (Index d = 0; d < rows.cols(); ++d) {
        const double diff = rows(i, d) - rows(j, d);
        sum += diff * diff;
      }
      out(j, i) = std::sqrt(sum);
    }
  });
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) out(i, j) = out(j, i);
  }
  return out;
}

}  // namespace ascprobe::geometry
