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

#include <gtest/gtest.h>

#include <cmath>

#include "ascprobe/errors.hpp"
#include "ascprobe/geometry.hpp"
#include "test_support.hpp"

namespace ascprobe::geometry {
namespace {

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

TEST(CalibrationTest, TwoEquidistantNeighbors) {
  const std::vector<double> d = {1.5, 1.5};
  const Calibration c = perplexity_calibration(d, 2.0);
  EXPECT_NEAR(c.entropy, std::log(2.0), 1e-5);
  const auto p = conditional_probabilities(d, c.sigma);
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
}

TEST(CalibrationTest, LowPerplexityConcentratesOnNearest) {
  const std::vector<double> d = {1.0, 2.0, 3.0, 4.0, 5.0};
  const Calibration c = perplexity_calibration(d, 1.01);
  const auto p = conditional_probabilities(d, c.sigma);
  EXPECT_GT(p[0], 0.99);
}

TEST(CalibrationTest, RandomRowsHitTarget) {
  Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d(200);
    for (auto& v : d) v = std::abs(rng.normal()) * 5.0 + 0.01;
    const double perplexity = 2.0 + 60.0 * rng.uniform01();
    const Calibration c = perplexity_calibration(d, perplexity);
    EXPECT_TRUE(c.converged);
    // Oracle: entropy recomputed from the returned bandwidth.
    const double h = entropy(conditional_probabilities(d, c.sigma));
    EXPECT_NEAR(h, std::log(perplexity), 1e-5);
    EXPECT_NEAR(std::exp(h), perplexity, 1e-4 * perplexity);
  }
}

TEST(TsneTest, SeparatesBlobsAndDescends) {
  Rng rng(52);
  const LabeledPointSet blobs = test::gaussian_blobs(rng, 3, 100, 10, 20.0);
  TsneConfig cfg;
  cfg.perplexity = 30.0;
  cfg.seed = 3;
  const ProjectionResult r = tsne(blobs.points, cfg);
  ASSERT_TRUE(r.tsne.has_value());
  EXPECT_EQ(r.coords.rows(), 300);
  EXPECT_EQ(r.coords.cols(), 2);
  EXPECT_TRUE(r.coords.allFinite());
  EXPECT_GT(test::knn_purity(r.coords, blobs.labels, 10), 0.95);
  EXPECT_LT(r.tsne->max_entropy_error, 1e-5);
  EXPECT_EQ(r.tsne->calibration_failures, 0u);
  EXPECT_EQ(r.tsne->iterations, 1000u);
  const auto& h = r.tsne->kl_history;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i - 1].iteration >= cfg.exaggeration_iters) {
      EXPECT_LE(h[i].kl, h[i - 1].kl + 1e-9) << "iteration " << h[i].iteration;
    }
  }
  EXPECT_EQ(r.tsne->final_kl, h.back().kl);
}

TEST(TsneTest, DeterministicUnderSeed) {
  Rng rng(53);
  const Matrix pts = test::random_matrix(rng, 60, 5);
  TsneConfig cfg;
  cfg.perplexity = 10.0;
  cfg.iterations = 300;
  cfg.seed = 9;
  const ProjectionResult a = tsne(pts, cfg);
  const ProjectionResult b = tsne(pts, cfg);
  EXPECT_EQ(a.coords, b.coords);
  cfg.seed = 10;
  EXPECT_NE(a.coords, tsne(pts, cfg).coords);
}

TEST(TsneTest, PerplexityMustBeBelowPointCount) {
  Rng rng(54);
  const Matrix pts = test::random_matrix(rng, 20, 3);
  TsneConfig cfg;
  EXPECT_THROW(tsne(pts, cfg), PerplexityTooHigh);
  cfg.perplexity = 5.0;
  cfg.iterations = 0;
  EXPECT_THROW(tsne(pts, cfg), DomainError);
  cfg.iterations = 10;
  EXPECT_THROW(tsne(test::random_matrix(rng, 3, 3), cfg), DomainError);
}

}  // namespace
}  // namespace ascprobe::geometry
