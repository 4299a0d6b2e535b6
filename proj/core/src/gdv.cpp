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
#include <numeric>

#include "ascprobe/errors.hpp"
#include "ascprobe/geometry.hpp"

namespace ascprobe::geometry {

LabeledPointSet LabeledPointSet::make(Matrix points, std::vector<std::size_t> labels) {
  LabeledPointSet set;
  set.points = std::move(points);
  set.labels = std::move(labels);
  set.num_classes =
      set.labels.empty() ? 0 : *std::max_element(set.labels.begin(), set.labels.end()) + 1;
  set.validate();
  return set;
}

void LabeledPointSet::validate() const {
  if (points.rows() < 2) throw InvalidPointSet("need at least two points");
  if (static_cast<Index>(labels.size()) != points.rows()) {
    throw InvalidPointSet("one label per point required");
  }
  for (auto sz : class_sizes()) {
    if (sz == 0) throw InvalidPointSet("every class must have at least one point");
  }
  if (!points.allFinite()) throw InvalidPointSet("points must be finite");
}

std::vector<std::size_t> LabeledPointSet::class_sizes() const {
  std::vector<std::size_t> sizes(num_classes, 0);
  for (auto l : labels) {
    if (l >= num_classes) throw InvalidPointSet("label outside [0, num_classes)");
    ++sizes[l];
  }
  return sizes;
}

ZScored zscore_half(const Matrix& points) {
  const Index n = points.rows();
  if (n < 2) throw InvalidPointSet("need at least two points");
  ZScored out;
  std::vector<Vector> columns;
  for (Index d = 0; d < points.cols(); ++d) {
    const auto x = points.col(d);
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) sum += x[i];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) ss += (x[i] - mean) * (x[i] - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n));
    const double magnitude = x.cwiseAbs().maxCoeff();
    if (sigma == 0.0 || sigma <= 1e-12 * magnitude) {
      ++out.dropped;
      continue;
    }
    Vector s(n);
    for (Index i = 0; i < n; ++i) s[i] = 0.5 * (x[i] - mean) / sigma;
    columns.push_back(std::move(s));
    out.kept.push_back(d);
  }
  if (columns.empty()) throw AllDimensionsConstant("every dimension has zero variance");
  out.scaled.resize(n, static_cast<Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) out.scaled.col(static_cast<Index>(k)) = columns[k];
  return out;
}

namespace {

// Sum of a small set of values in ascending order, so the result does not
// depend on the order they were produced in.
double order_free_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace

GdvResult gdv(const LabeledPointSet& data) {
  data.validate();
  const std::size_t L = data.num_classes;
  if (L < 2) throw InvalidPointSet("GDV needs at least two classes");
  const auto sizes = data.class_sizes();
  for (std::size_t l = 0; l < L; ++l) {
    if (sizes[l] < 2) {
      throw UndefinedIntraClass("class " + std::to_string(l) + " has " +
                                std::to_string(sizes[l]) + " point(s)");
    }
  }

  const ZScored z = zscore_half(data.points);
  const Index n = z.scaled.rows();
  const Index dims = z.scaled.cols();

  // Canonical column order (lexicographic on values) makes every distance
  // independent of how the input dimensions were ordered.
  std::vector<Index> column_order(static_cast<std::size_t>(dims));
  std::iota(column_order.begin(), column_order.end(), Index{0});
  std::sort(column_order.begin(), column_order.end(), [&](Index a, Index b) {
    for (Index i = 0; i < n; ++i) {
      if (z.scaled(i, a) != z.scaled(i, b)) return z.scaled(i, a) < z.scaled(i, b);
    }
    return false;
  });
  std::vector<double> rows(static_cast<std::size_t>(n * dims));
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < dims; ++k) {
      rows[static_cast<std::size_t>(i * dims + k)] = z.scaled(i, column_order[static_cast<std::size_t>(k)]);
    }
  }
  auto distance = [&](std::size_t a, std::size_t b) {
    const double* pa = rows.data() + a * static_cast<std::size_t>(dims);
    const double* pb = rows.data() + b * static_cast<std::size_t>(dims);
    double sum = 0.0;
    for (Index k = 0; k < dims; ++k) {
      const double diff = pa[k] - pb[k];
      sum += diff * diff;
    }
    return std::sqrt(sum);
  };

  // Members per class in data order; classes visited in order of first
  // appearance so pair sums do not depend on the label values.
  std::vector<std::vector<std::size_t>> members(L);
  std::vector<std::size_t> first_seen;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (members[data.labels[i]].empty()) first_seen.push_back(data.labels[i]);
    members[data.labels[i]].push_back(i);
  }

  GdvResult result;
  result.intra = Vector::Zero(static_cast<Index>(L));
  result.inter = Matrix::Zero(static_cast<Index>(L), static_cast<Index>(L));
  result.d_eff = static_cast<std::size_t>(dims);
  result.dropped_dims = z.dropped;

  std::vector<double> intra_values;
  for (std::size_t l : first_seen) {
    const auto& m = members[l];
    double sum = 0.0;
    for (std::size_t a = 0; a + 1 < m.size(); ++a) {
      for (std::size_t b = a + 1; b < m.size(); ++b) sum += distance(m[a], m[b]);
    }
    const double count = static_cast<double>(m.size()) * static_cast<double>(m.size() - 1);
    result.intra[static_cast<Index>(l)] = 2.0 * sum / count;
    intra_values.push_back(result.intra[static_cast<Index>(l)]);
  }

  std::vector<double> inter_values;
  for (std::size_t p = 0; p < first_seen.size(); ++p) {
    for (std::size_t q = p + 1; q < first_seen.size(); ++q) {
      const auto& ml = members[first_seen[p]];
      const auto& mm = members[first_seen[q]];
      double sum = 0.0;
      for (std::size_t a : ml) {
        for (std::size_t b : mm) sum += distance(a, b);
      }
      const double mean = sum / (static_cast<double>(ml.size()) * static_cast<double>(mm.size()));
      const auto li = static_cast<Index>(first_seen[p]);
      const auto mi = static_cast<Index>(first_seen[q]);
      result.inter(li, mi) = mean;
      result.inter(mi, li) = mean;
      inter_values.push_back(mean);
    }
  }

  const double Ld = static_cast<double>(L);
  const double mean_intra = order_free_sum(std::move(intra_values)) / Ld;
  const double mean_inter = 2.0 * order_free_sum(std::move(inter_values)) / (Ld * (Ld - 1.0));
  result.gdv = (mean_intra - mean_inter) / std::sqrt(static_cast<double>(dims));
  return result;
}

}  // namespace ascprobe::geometry
