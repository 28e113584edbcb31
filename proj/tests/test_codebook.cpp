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

#include <cmath>
#include <set>
#include <vector>

#include "binvfl/codebook.hpp"
#include "binvfl/hash_layer.hpp"
#include "test_support.hpp"

namespace binvfl {
namespace {

std::vector<double> bits_of(unsigned mask, std::size_t d) {
  std::vector<double> v(d);
  for (std::size_t b = 0; b < d; ++b) v[b] = (mask >> b) & 1U ? 1.0 : -1.0;
  return v;
}

TEST(CodeLength, CeilLog2) {
  EXPECT_EQ(code_length(2), 1u);
  EXPECT_EQ(code_length(3), 2u);
  EXPECT_EQ(code_length(4), 2u);
  EXPECT_EQ(code_length(10), 4u);
  EXPECT_EQ(code_length(100), 7u);
  EXPECT_EQ(code_length(128), 7u);
  EXPECT_EQ(code_length(129), 8u);
  EXPECT_THROW(code_length(1), std::invalid_argument);
}

TEST(Generate, TwoClassesOneBitUsesBothCodes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto cb = generate_codebook(2, 1, seed);
    EXPECT_EQ(cb.codes(0, 0), -cb.codes(1, 0));
  }
}

TEST(Generate, TenClassesFourBitsAreDistinct) {
  const auto cb = generate_codebook(10, 4, 7);
  std::set<std::vector<double>> rows;
  for (std::size_t c = 0; c < 10; ++c) rows.emplace(cb.code(c).begin(), cb.code(c).end());
  EXPECT_EQ(rows.size(), 10u);
  EXPECT_TRUE(is_binary_code(cb.codes));
  EXPECT_NO_THROW(cb.validate());
}

TEST(Generate, DeterministicPerSeed) {
  EXPECT_EQ(generate_codebook(8, 16, 3).codes, generate_codebook(8, 16, 3).codes);
  EXPECT_NE(generate_codebook(8, 16, 3).codes, generate_codebook(8, 16, 4).codes);
}

TEST(Generate, RejectsTooFewPatterns) {
  EXPECT_THROW(generate_codebook(5, 2, 0), std::invalid_argument);
  EXPECT_NO_THROW(generate_codebook(4, 2, 0));
}

TEST(Generate, ValidateCatchesDuplicates) {
  auto cb = generate_codebook(3, 4, 1);
  for (std::size_t b = 0; b < 4; ++b) cb.codes(1, b) = cb.codes(0, b);
  EXPECT_THROW(cb.validate(), std::invalid_argument);
}

TEST(Generate, PerBitMeanIsUnbiased) {
  // C=4, d=16 over many regenerations: each bit position's mean is within
  // 3 sigma of 0 (sigma = 1/sqrt(trials * C)).
  const int trials = 2000;
  std::vector<double> sums(16, 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto cb = generate_codebook(4, 16, 1000 + t);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t b = 0; b < 16; ++b) sums[b] += cb.codes(c, b);
  }
  const double n = trials * 4.0;
  for (double s : sums) EXPECT_LE(std::abs(s / n), 3.0 / std::sqrt(n) * 1.4);
}

TEST(Hamming, Examples) {
  const std::vector<double> a = {1, -1, 1, 1};
  const std::vector<double> b = {1, 1, -1, 1};
  EXPECT_EQ(hamming(a, a), 0u);
  EXPECT_EQ(hamming(a, b), 2u);
  EXPECT_EQ(cosine_binary(a, b), 0.0);
  EXPECT_EQ(cosine_binary(a, a), 1.0);
  std::vector<double> c(16, 1.0), neg(16, -1.0);
  EXPECT_EQ(hamming(c, neg), 16u);
  std::vector<double> four = c;
  for (int i = 0; i < 4; ++i) four[i] = -1.0;
  EXPECT_EQ(cosine_binary(c, four), 0.5);
}

TEST(Hamming, RejectsBadInput) {
  const std::vector<double> a = {1, -1};
  const std::vector<double> b = {1, -1, 1};
  const std::vector<double> z = {1, 0};
  EXPECT_THROW(hamming(a, b), DimensionError);
  EXPECT_THROW(hamming(a, z), std::invalid_argument);
  EXPECT_THROW(cosine_binary(z, a), std::invalid_argument);
}

TEST(Hamming, CosineIdentityHoldsExactly) {
  Rng rng(9);
  for (std::size_t d : {1u, 4u, 16u, 128u}) {
    for (int t = 0; t < 2000; ++t) {
      const auto m = testing::random_codes(2, d, rng);
      const double h = static_cast<double>(hamming(m.row(0), m.row(1)));
      ASSERT_EQ(h, static_cast<double>(d) / 2.0 * (1.0 - cosine_binary(m.row(0), m.row(1))));
      // Count of differing positions, by direct comparison.
      std::size_t diff = 0;
      for (std::size_t k = 0; k < d; ++k) diff += m(0, k) != m(1, k);
      ASSERT_EQ(hamming(m.row(0), m.row(1)), diff);
    }
  }
}

TEST(TargetCodes, IndexesRows) {
  const auto cb = generate_codebook(3, 5, 2);
  const int labels[] = {0, 0, 1};
  const auto t = target_codes(labels, cb);
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_TRUE(std::equal(t.row(1).begin(), t.row(1).end(), cb.code(0).begin()));
  EXPECT_TRUE(std::equal(t.row(2).begin(), t.row(2).end(), cb.code(1).begin()));
  EXPECT_EQ(target_codes(std::span<const int>{}, cb).rows(), 0u);
  const int bad[] = {3};
  EXPECT_THROW(target_codes(bad, cb), std::out_of_range);
}

TEST(TargetCodes, EqualsOneHotProduct) {
  const auto cb = generate_codebook(6, 8, 5);
  const int labels[] = {5, 2, 2, 0, 4};
  Matrix onehot(5, 6);
  for (int r = 0; r < 5; ++r) onehot(r, labels[r]) = 1.0;
  EXPECT_EQ(target_codes(labels, cb), matmul(onehot, cb.codes));
}

TEST(Orthogonality, HandExamples) {
  Codebook ortho{2, 2, Matrix::from_rows({{1, 1}, {1, -1}}), 0};
  const auto r = orthogonality_report(ortho);
  EXPECT_EQ(r.pairs, 1u);
  EXPECT_EQ(r.mean_abs_cos, 0.0);
  EXPECT_EQ(r.orthogonal_fraction, 1.0);
  Codebook opposite{2, 1, Matrix::from_rows({{1}, {-1}}), 0};
  const auto o = orthogonality_report(opposite);
  EXPECT_EQ(o.mean_cos, -1.0);
  EXPECT_EQ(o.orthogonal_fraction, 0.0);
}

TEST(Orthogonality, RandomCodesAreNearlyOrthogonalOnAverage) {
  const auto r = orthogonality_report(generate_codebook(8, 64, 11));
  EXPECT_EQ(r.pairs, 28u);
  EXPECT_LE(std::abs(r.mean_cos), 3.0 / std::sqrt(64.0 * 28.0));
}

TEST(Orthogonality, FormulaMatchesEnumeration) {
  for (std::size_t d = 1; d <= 12; ++d) {
    // Fraction of ordered pairs (a, b) of d-bit codes with a.b = 0.
    const unsigned n = 1U << d;
    std::size_t orth = 0;
    for (unsigned a = 0; a < n; ++a) {
      const auto va = bits_of(a, d);
      for (unsigned b = 0; b < n; ++b) {
        const auto vb = bits_of(b, d);
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += va[k] * vb[k];
        orth += dot == 0.0;
      }
    }
    const double frac = static_cast<double>(orth) / (static_cast<double>(n) * n);
    EXPECT_NEAR(orthogonal_pair_probability(d), frac, 1e-12) << "d=" << d;
  }
  // n=4, p=1/2: 6 / 16.
  EXPECT_NEAR(orthogonal_pair_probability(4), 0.375, 1e-15);
}

}  // namespace
}  // namespace binvfl
