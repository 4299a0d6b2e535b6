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

#include "ascprobe/geometry.hpp"
#include "test_support.hpp"

namespace ascprobe::geometry {
namespace {

TEST(MdsTest, RecoversPlanarConfigurations) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.below(100));
    const Matrix x = test::random_matrix(rng, n, 2, 1.0 + 10.0 * rng.uniform01());
    const ProjectionResult r = classical_mds(pairwise_distances(x), 2);
    EXPECT_EQ(r.method, Method::Mds);
    ASSERT_TRUE(r.mds.has_value());
    EXPECT_LT(test::procrustes_rms(x, r.coords), 1e-8) << "n=" << n;
    EXPECT_LT(r.mds->residual, 1e-10);
  }
}

TEST(MdsTest, RightTriangle) {
  Matrix d(3, 3);
  d << 0, 3, 5,  //
      3, 0, 4,   //
      5, 4, 0;
  const ProjectionResult r = classical_mds(d, 2);
  const Matrix back = pairwise_distances(r.coords);
  EXPECT_NEAR(back(0, 1), 3.0, 1e-9);
  EXPECT_NEAR(back(1, 2), 4.0, 1e-9);
  EXPECT_NEAR(back(0, 2), 5.0, 1e-9);
  // Law of cosines: the angle at point 1 is a right angle.
  const Vector a = r.coords.row(0) - r.coords.row(1);
  const Vector b = r.coords.row(2) - r.coords.row(1);
  EXPECT_NEAR(a.dot(b), 0.0, 1e-9);
}

TEST(MdsTest, IdenticalPointsGiveZeros) {
  const ProjectionResult r = classical_mds(Matrix::Zero(6, 6), 2);
  EXPECT_EQ(r.coords, Matrix::Zero(6, 2));
  EXPECT_TRUE(r.mds->nonpositive_axis);
}

TEST(MdsTest, CollinearDataFlagsSecondAxis) {
  Matrix x(5, 1);
  x << 0, 1, 2, 4, 7;
  const ProjectionResult r = classical_mds(pairwise_distances(x), 2);
  EXPECT_TRUE(r.mds->nonpositive_axis);
  EXPECT_EQ(r.coords.col(1), Vector::Zero(5));
  EXPECT_LT(test::procrustes_rms(x, r.coords.leftCols(1)), 1e-10);
}

TEST(MdsTest, SignsAreCanonical) {
  Rng rng(42);
  const Matrix x = test::random_matrix(rng, 30, 4);
  const ProjectionResult a = classical_mds(pairwise_distances(x), 2);
  const ProjectionResult b = classical_mds(pairwise_distances(-x), 2);
  EXPECT_LT((a.coords - b.coords).cwiseAbs().maxCoeff(), 1e-10);
  for (Index k = 0; k < 2; ++k) {
    Index first = 0;
    while (std::abs(a.coords(first, k)) < 1e-9) ++first;
    EXPECT_GT(a.coords(first, k), 0.0);
  }
}

TEST(MdsTest, Deterministic) {
  Rng rng(43);
  const Matrix d = pairwise_distances(test::random_matrix(rng, 50, 6));
  EXPECT_EQ(classical_mds(d, 2).coords, classical_mds(d, 2).coords);
}

}  // namespace
}  // namespace ascprobe::geometry
