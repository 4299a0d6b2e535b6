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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ascprobe/errors.hpp"
#include "ascprobe/geometry.hpp"

namespace ascprobe::geometry {

namespace {

constexpr int kMaxQlSweeps = 60;
constexpr int kMaxInverseIterations = 8;
constexpr double kInverseTolerance = 1e-12;

// LU factorization with partial pivoting of a tridiagonal matrix
// (sub, diag, super), in the LAPACK gttrf layout.
struct TridiagonalLu {
  std::vector<double> lower;   // multipliers
  std::vector<double> diag;    // U diagonal
  std::vector<double> upper;   // U first superdiagonal
  std::vector<double> upper2;  // U second superdiagonal (fill-in)
  std::vector<std::uint8_t> swapped;

  TridiagonalLu(const Vector& d, const Vector& e, double shift, double tiny) {
    const auto n = static_cast<std::size_t>(d.size());
    diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = d[static_cast<Index>(i)] - shift;
    lower.assign(e.data(), e.data() + e.size());
    upper = lower;
    upper2.assign(n > 2 ? n - 2 : 0, 0.0);
    swapped.assign(n > 0 ? n - 1 : 0, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(diag[i]) >= std::abs(lower[i])) {
        if (diag[i] == 0.0) diag[i] = tiny;
        const double fact = lower[i] / diag[i];
        lower[i] = fact;
        diag[i + 1] -= fact * upper[i];
      } else {
        const double fact = diag[i] / lower[i];
        diag[i] = lower[i];
        lower[i] = fact;
        const double temp = upper[i];
        upper[i] = diag[i + 1];
        diag[i + 1] = temp - fact * diag[i + 1];
        if (i + 2 < n) {
          upper2[i] = upper[i + 1];
          upper[i + 1] = -fact * upper[i + 1];
        }
        swapped[i] = 1;
      }
    }
    // Exact singularity is expected when the shift hits an eigenvalue.
    for (auto& v : diag) {
      if (std::abs(v) < tiny) v = std::copysign(tiny, v == 0.0 ? 1.0 : v);
    }
  }

  void solve(Vector& b) const {
    const auto n = diag.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto ii = static_cast<Index>(i);
      if (swapped[i]) {
        const double temp = b[ii] - lower[i] * b[ii + 1];
        b[ii] = b[ii + 1];
        b[ii + 1] = temp;
      } else {
        b[ii + 1] -= lower[i] * b[ii];
      }
    }
    for (std::size_t i = n; i-- > 0;) {
      const auto ii = static_cast<Index>(i);
      double v = b[ii];
      if (i + 1 < n) v -= upper[i] * b[ii + 1];
      if (i + 2 < n) v -= upper2[i] * b[ii + 2];
      b[ii] = v / diag[i];
    }
  }
};

}  // namespace

Vector tridiagonal_eigenvalues(Vector d, Vector offdiag) {
  const Index n = d.size();
  if (n == 0) return d;
  Vector e = Vector::Zero(n);
  e.head(n - 1) = offdiag.head(n - 1);
  const double eps = std::numeric_limits<double>::epsilon();
  double anorm = 0.0;
  for (Index i = 0; i < n; ++i) anorm = std::max(anorm, std::abs(d[i]) + 2.0 * std::abs(e[i]));
  // Rank-deficient inputs leave clusters of eigenvalues at roundoff level,
  // where the local test alone can stall.
  const double absolute = eps * anorm;

  for (Index l = 0; l < n; ++l) {
    int sweeps = 0;
    Index m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd || std::abs(e[m]) <= absolute) break;
      }
      if (m == l) break;
      if (++sweeps > kMaxQlSweeps) {
        throw EigenFailure("implicit QL did not converge for eigenvalue " + std::to_string(l));
      }
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      Index i = m - 1;
      bool underflow = false;
      for (; i >= l; --i) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (true);
  }
  std::sort(d.data(), d.data() + n);
  return d;
}

Eigenpairs top_eigenpairs(const Matrix& symmetric, std::size_t k) {
  const Index n = symmetric.rows();
  if (symmetric.cols() != n) throw EigenFailure("matrix is not square");
  if (!symmetric.allFinite()) throw EigenFailure("matrix has non-finite entries");
  k = std::min<std::size_t>(k, static_cast<std::size_t>(n));

  Eigenpairs out;
  if (n == 0) return out;
  if (n == 1) {
    out.values = symmetric.diagonal();
    out.vectors = Matrix::Ones(1, static_cast<Index>(k));
    return out;
  }

  if (symmetric.cwiseAbs().maxCoeff() == 0.0) {
    out.values = Vector::Zero(n);
    out.vectors = Matrix::Identity(n, static_cast<Index>(k));
    return out;
  }

  Eigen::Tridiagonalization<Matrix> tri(symmetric);
  const Vector diag = tri.diagonal();
  const Vector sub = tri.subDiagonal();
  const Vector ascending = tridiagonal_eigenvalues(diag, sub);
  out.values = ascending.reverse();

  const double norm = std::max(diag.cwiseAbs().maxCoeff() + 2.0 * sub.cwiseAbs().maxCoeff(),
                               std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();
  const double tiny = eps * norm;
  const double cluster_gap = 1e-3 * norm;

  Matrix tri_vectors(n, static_cast<Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    const double lambda = out.values[static_cast<Index>(j)];
    // Perturbing the shift keeps the factorization away from exact
    // singularity without losing the eigenvector.
    const TridiagonalLu lu(diag, sub, lambda + 10.0 * tiny, tiny);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
      v[i] = 1.0 + 0.5 * std::sin(static_cast<double>((i + 1) * (j + 3)));
    }
    v.normalize();
    for (int it = 0; it < kMaxInverseIterations; ++it) {
      Vector w = v;
      lu.solve(w);
      for (std::size_t q = 0; q < j; ++q) {
        if (std::abs(out.values[static_cast<Index>(q)] - lambda) < cluster_gap) {
          const auto prev = tri_vectors.col(static_cast<Index>(q));
          w -= prev.dot(w) * prev;
        }
      }
      const double wn = w.norm();
      if (!(wn > 0.0) || !std::isfinite(wn)) {
        throw EigenFailure("inverse iteration broke down for eigenvalue " + std::to_string(j));
      }
      w /= wn;
      if (w.dot(v) < 0.0) w = -w;
      const double change = (w - v).norm();
      v = std::move(w);
      if (change < kInverseTolerance) break;
    }
    tri_vectors.col(static_cast<Index>(j)) = v;
  }
  out.vectors = tri.matrixQ() * tri_vectors;
  return out;
}

}  // namespace ascprobe::geometry
