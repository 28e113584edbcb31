// Copyright 2026 The binvfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "binvfl/random.hpp"
#include "binvfl/tensor.hpp"
#include "test_support.hpp"

namespace binvfl {
namespace {

using testing::random_matrix;

// Triple loop with no shortcuts, used as the reference product.
Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

TEST(Matrix, ConstructorRejectsWrongLength) {
  EXPECT_THROW(Matrix(2, 3, std::vector<double>(5)), DimensionError);
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), DimensionError);
}

TEST(Matrix, RowMajorLayout) {
  const auto m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m.values(), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(m(1, 0), 4.0);
  EXPECT_EQ(m.row(1)[2], 6.0);
}

TEST(Matrix, ProductsMatchNaiveOracle) {
  Rng rng(11);
  const auto a = random_matrix(5, 7, rng);
  const auto b = random_matrix(7, 3, rng);
  const auto c = random_matrix(5, 3, rng);
  EXPECT_LT(testing::max_abs_diff(matmul(a, b).data(), naive_product(a, b).data()), 1e-12);
  EXPECT_LT(testing::max_abs_diff(matmul_tn(a, c).data(), naive_product(transpose(a), c).data()),
            1e-12);
  EXPECT_LT(testing::max_abs_diff(matmul_nt(a, transpose(b)).data(), naive_product(a, b).data()),
            1e-12);
}

TEST(Matrix, ProductShapeErrors) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
  EXPECT_THROW(matmul_tn(Matrix(2, 3), Matrix(3, 3)), DimensionError);
  EXPECT_THROW(matmul_nt(Matrix(2, 3), Matrix(2, 2)), DimensionError);
}

TEST(Matrix, ConcatAndBlocksRoundTrip) {
  Rng rng(3);
  const std::vector<Matrix> blocks = {random_matrix(4, 2, rng), random_matrix(4, 3, rng)};
  const auto joined = hconcat(blocks);
  EXPECT_EQ(joined.cols(), 5u);
  EXPECT_EQ(column_block(joined, 0, 2), blocks[0]);
  EXPECT_EQ(column_block(joined, 2, 3), blocks[1]);
  EXPECT_THROW(column_block(joined, 4, 2), DimensionError);
  const std::vector<Matrix> ragged = {Matrix(2, 1), Matrix(3, 1)};
  EXPECT_THROW(hconcat(ragged), DimensionError);
}

TEST(Matrix, SelectRowsAndCols) {
  const auto m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const std::size_t rows[] = {2, 0};
  const std::size_t cols[] = {1};
  EXPECT_EQ(select_rows(m, rows), Matrix::from_rows({{7, 8, 9}, {1, 2, 3}}));
  EXPECT_EQ(select_cols(m, cols), Matrix::from_rows({{2}, {5}, {8}}));
  const std::size_t bad[] = {3};
  EXPECT_THROW(select_rows(m, bad), DimensionError);
  EXPECT_THROW(select_cols(m, bad), DimensionError);
}

TEST(Matrix, ColumnSumsArgmaxAndFiniteness) {
  const auto m = Matrix::from_rows({{1, 5, 5}, {-1, -2, 0}});
  EXPECT_EQ(column_sums(m), (std::vector<double>{0, 3, 5}));
  // Ties resolve to the first index.
  EXPECT_EQ(argmax_rows(m), (std::vector<int>{1, 2}));
  EXPECT_TRUE(all_finite(m));
  auto bad = m;
  bad(0, 0) = NAN;
  EXPECT_FALSE(all_finite(bad));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs |= x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(5);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  // Var of U(0,1) is 1/12; 4 sigma bounds on the sample mean and second moment.
  EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(Rng, NormalMoments) {
  Rng rng(6);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, LaplaceMomentsAndTail) {
  Rng rng(7);
  const double b = 0.5;
  const int n = 400000;
  double sum = 0.0, abs_sum = 0.0;
  int beyond = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.laplace(b);
    sum += x;
    abs_sum += std::abs(x);
    beyond += x > 1.0;
  }
  // E|X| = b and P(X > t) = exp(-t/b)/2 for Laplace(0, b).
  EXPECT_NEAR(sum / n, 0.0, 4.0 * std::sqrt(2.0) * b / std::sqrt(n));
  EXPECT_NEAR(abs_sum / n, b, 4.0 * b / std::sqrt(n));
  const double p = 0.5 * std::exp(-1.0 / b);
  EXPECT_NEAR(static_cast<double>(beyond) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Rng, ShuffleIsPermutationAndIndexInRange) {
  Rng rng(8);
  auto v = iota_indices(50);
  rng.shuffle(v);
  std::set<std::size_t> seen(v.begin(), v.end());
  EXPECT_EQ(seen.size(), 50u);
  EXPECT_EQ(*seen.rbegin(), 49u);
  EXPECT_NE(v, iota_indices(50));
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.index(3), 3u);
}

}  // namespace
}  // namespace binvfl
