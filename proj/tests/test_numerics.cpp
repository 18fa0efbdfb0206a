// Copyright 2026 The TiC Stream Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tic/numerics.hpp"

namespace tic {
namespace {

using testing::random_matrix;

// i-k-j accumulation from zero, the order the blocked kernel must reproduce.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
      c(i, j) = acc;
    }
  }
  return c;
}

TEST(Matrix, RejectsEmptyShapes) {
  EXPECT_THROW(Matrix(0, 3), ShapeError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>(3)), ShapeError);
  EXPECT_THROW(Matrix::from_rows({{1.0, 2.0}, {3.0}}), ShapeError);
}

TEST(Matmul, MatchesNaiveBitwiseAcrossBlockEdges) {
  Rng rng(7, 1);
  for (std::size_t m : {1u, 3u, 8u, 17u}) {
    for (std::size_t k : {1u, 5u, 16u}) {
      for (std::size_t n : {1u, 7u, 8u, 9u, 33u}) {
        const Matrix a = random_matrix(m, k, rng);
        const Matrix b = random_matrix(k, n, rng);
        EXPECT_EQ(matmul(a, b), naive_matmul(a, b)) << m << "x" << k << "x" << n;
        EXPECT_EQ(matmul_bt(a, transpose(b)), naive_matmul(a, b));
        EXPECT_EQ(matmul_at(transpose(a), b), naive_matmul(a, b));
      }
    }
  }
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
  EXPECT_THROW(matmul_bt(Matrix(2, 3), Matrix(2, 4)), ShapeError);
  EXPECT_THROW(matmul_at(Matrix(2, 3), Matrix(3, 3)), ShapeError);
}

TEST(Transpose, TiledMatchesDefinition) {
  Rng rng(3, 3);
  const Matrix a = random_matrix(37, 19, rng);
  const Matrix t = transpose(a);
  ASSERT_EQ(t.rows(), 19u);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) EXPECT_EQ(t(j, i), a(i, j));
}

TEST(Softmax, RowsAndColumnsSumToOne) {
  Rng rng(1, 2);
  const Matrix a = random_matrix(5, 4, rng, 30.0);
  const Matrix r = softmax_rows(a);
  const Matrix c = softmax_cols(a);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (double v : r.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  for (std::size_t j = 0; j < 4; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += c(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Softmax, LargeLogitsStayFinite) {
  const Matrix r = softmax_rows(Matrix::from_rows({{1000.0, 999.0}}));
  EXPECT_NEAR(r(0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_THROW(softmax_rows(Matrix::from_rows({{NAN, 0.0}})), NumericError);
}

TEST(L2Normalize, UnitRowsAndDegenerateInput) {
  const Matrix n = l2_normalize_rows(Matrix::from_rows({{3.0, 4.0}, {0.0, -2.0}}));
  EXPECT_DOUBLE_EQ(n(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(n(0, 1), 0.8);
  EXPECT_DOUBLE_EQ(n(1, 1), -1.0);
  EXPECT_THROW(l2_normalize_rows(Matrix::from_rows({{1.0, 1.0}, {0.0, 0.0}})),
               DegenerateInputError);
}

TEST(Rng, SameStateSameSequence) {
  Rng a(42, derive_stream({1, 2, 3}));
  Rng b(42, derive_stream({1, 2, 3}));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedStreamsDiffer) {
  EXPECT_NE(derive_stream({1, 2}), derive_stream({2, 1}));
  EXPECT_NE(derive_stream({1}), derive_stream({1, 0}));
  Rng a(0, 1), b(0, 2), c(1, 1);
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
}

TEST(Rng, SplitMixReferenceValue) {
  // First output of SplitMix64 from state 0.
  std::uint64_t s = 0;
  EXPECT_EQ(splitmix64(s), 0xE220A8397B1DCDAFull);
}

TEST(Rng, UniformAndBelowRanges) {
  Rng rng(5, 5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const auto k = rng.below(7);
    EXPECT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_THROW(rng.below(0), IndexError);
}

TEST(Rng, NormalMoments) {
  Rng rng(11, 0);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(9, 9);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps').
  std::vector<double> p = {1.0, -2.0};
  const std::vector<double> g = {0.5, -4.0};
  AdamState st(2);
  adam_step(p, g, st, 0.1);
  EXPECT_EQ(st.step_count, 1u);
  EXPECT_NEAR(p[0], 0.9, 1e-7);
  EXPECT_NEAR(p[1], -1.9, 1e-7);
}

TEST(Adam, ZeroLearningRateLeavesParamsBitwise) {
  std::vector<double> p = {0.0, -0.0, 3.5};
  const std::vector<double> before = p;
  AdamState st(3);
  adam_step(p, std::vector<double>{1.0, 1.0, 1.0}, st, 0.0);
  EXPECT_EQ(std::signbit(p[1]), std::signbit(before[1]));
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step_count, 1u);
}

TEST(Adam, Errors) {
  std::vector<double> p(2);
  AdamState st(3);
  EXPECT_THROW(adam_step(p, std::vector<double>(2), st, 0.1), ShapeError);
  AdamState ok(2);
  EXPECT_THROW(adam_step(p, std::vector<double>(2), ok, -1.0), ConfigError);
}

TEST(Adam, ConvergesOnQuadratic) {
  std::vector<double> p = {5.0, -3.0};
  AdamState st(2);
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> g = {2.0 * (p[0] - 1.0), 2.0 * (p[1] + 2.0)};
    adam_step(p, g, st, 0.05);
  }
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], -2.0, 1e-3);
}

TEST(FiniteDiff, CubicGradient) {
  const auto f = [](std::span<const double> x) { return x[0] * x[0] * x[0] + 2.0 * x[1]; };
  const std::vector<double> x = {1.5, -1.0};
  const auto g = finite_diff_grad(f, x, 1e-5);
  EXPECT_NEAR(g[0], 3.0 * 1.5 * 1.5, 1e-8);
  EXPECT_NEAR(g[1], 2.0, 1e-9);
  EXPECT_THROW(finite_diff_grad(f, x, 0.0), ConfigError);
}

}  // namespace
}  // namespace tic
