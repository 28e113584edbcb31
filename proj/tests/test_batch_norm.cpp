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

#include "binvfl/batch_norm.hpp"
#include "binvfl/hash_layer.hpp"
#include "test_support.hpp"

namespace binvfl {
namespace {

using testing::max_abs_diff;
using testing::numeric_grad;
using testing::random_matrix;
using testing::weighted_sum;

TEST(BatchNorm, TwoValueColumnMapsToPlusMinusOne) {
  auto s = BatchNormState::identity(1);
  s.eps = 1e-12;
  const auto out = bn_forward_train(Matrix::from_rows({{2}, {4}}), s).output;
  EXPECT_NEAR(out(0, 0), -1.0, 1e-9);
  EXPECT_NEAR(out(1, 0), 1.0, 1e-9);
}

TEST(BatchNorm, ConstantColumnMapsToZero) {
  auto s = BatchNormState::identity(1);
  const auto out = bn_forward_train(Matrix(5, 1, 3.25), s).output;
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(BatchNorm, RandomBatchIsStandardized) {
  Rng rng(1);
  auto s = BatchNormState::identity(3);
  const auto out = bn_forward_train(random_matrix(8, 3, rng, 4.0), s).output;
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < 8; ++r) {
      mean += out(r, c);
      sq += out(r, c) * out(r, c);
    }
    EXPECT_NEAR(mean / 8, 0.0, 1e-9);
    EXPECT_NEAR(sq / 8, 1.0, 1e-3);
  }
}

TEST(BatchNorm, RunningStatsUseEmaWithBesselCorrection) {
  auto s = BatchNormState::identity(1);
  const auto x = Matrix::from_rows({{1}, {2}, {6}});
  bn_forward_train(x, s);
  // Batch mean 3, biased variance 14/3, unbiased 7.
  EXPECT_NEAR(s.running_mean[0], 0.9 * 0.0 + 0.1 * 3.0, 1e-15);
  EXPECT_NEAR(s.running_var[0], 0.9 * 1.0 + 0.1 * 7.0, 1e-15);
  EXPECT_EQ(s.batches_seen, 1u);
}

TEST(BatchNorm, TrainRejectsSingleRowBatch) {
  auto s = BatchNormState::identity(2);
  EXPECT_THROW(bn_forward_train(Matrix(1, 2), s), std::invalid_argument);
  EXPECT_THROW(bn_forward_train(Matrix(4, 3), s), DimensionError);
}

TEST(BatchNorm, InferRequiresTrainedStatistics) {
  const auto s = BatchNormState::identity(2);
  EXPECT_THROW(bn_forward_infer(Matrix(1, 2), s), std::logic_error);
}

TEST(BatchNorm, InferWithUnitStatsIsNearIdentity) {
  auto s = BatchNormState::identity(2);
  s.batches_seen = 1;
  const auto x = Matrix::from_rows({{0.5, -2.0}});
  const auto out = bn_forward_infer(x, s);
  EXPECT_NEAR(out(0, 0), 0.5, 1e-5);
  EXPECT_NEAR(out(0, 1), -2.0, 1e-5);
  s.running_mean = {5.0, 5.0};
  EXPECT_NEAR(bn_forward_infer(Matrix(1, 2, 5.0), s)(0, 0), 0.0, 1e-12);
}

TEST(BatchNorm, InferMatchesFormula) {
  Rng rng(2);
  BatchNormState s;
  s.gamma = {1.3, -0.4, 0.8};
  s.beta = {0.1, 0.7, -0.2};
  s.running_mean = {0.5, -1.0, 2.0};
  s.running_var = {0.3, 2.5, 1.1};
  s.batches_seen = 4;
  const auto x = random_matrix(4, 3, rng);
  const auto out = bn_forward_infer(x, s);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      const double k = s.gamma[c] / std::sqrt(s.running_var[c] + s.eps);
      EXPECT_NEAR(out(r, c), k * x(r, c) + (s.beta[c] - k * s.running_mean[c]), 1e-12);
    }
}

TEST(BatchNorm, InferIsBatchSizeInvariant) {
  Rng rng(3);
  auto s = BatchNormState::identity(2);
  bn_forward_train(random_matrix(10, 2, rng), s);
  const auto x = random_matrix(5, 2, rng);
  const auto all = bn_forward_infer(x, s);
  for (std::size_t r = 0; r < 5; ++r) {
    const auto one = bn_forward_infer(Matrix::row_vector(x.row(r)), s);
    EXPECT_EQ(one(0, 0), all(r, 0));
    EXPECT_EQ(one(0, 1), all(r, 1));
  }
}

TEST(BatchNorm, BackwardZeroUpstreamAndBetaSums) {
  Rng rng(4);
  auto s = BatchNormState::identity(2);
  const auto fwd = bn_forward_train(random_matrix(4, 2, rng), s);
  const auto zero = bn_backward(Matrix(4, 2), fwd.cache);
  for (double v : zero.grad_input.data()) EXPECT_EQ(v, 0.0);
  for (double v : zero.grad_gamma) EXPECT_EQ(v, 0.0);
  const auto g = random_matrix(4, 2, rng);
  EXPECT_EQ(bn_backward(g, fwd.cache).grad_beta, column_sums(g));
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences) {
  Rng rng(5);
  auto x = random_matrix(4, 2, rng);
  auto s = BatchNormState::identity(2);
  s.gamma = {1.7, -0.6};
  s.beta = {0.2, 0.9};
  const auto w = random_matrix(4, 2, rng);
  auto loss = [&] {
    auto scratch = s;  // keep running stats out of the measurement
    return weighted_sum(bn_forward_train(x, scratch).output, w);
  };
  auto scratch = s;
  const auto fwd = bn_forward_train(x, scratch);
  const auto back = bn_backward(w, fwd.cache);
  EXPECT_LE(max_abs_diff(back.grad_input.data(), numeric_grad(x.data(), loss)), 1e-5);
  EXPECT_LE(max_abs_diff(back.grad_gamma, numeric_grad(s.gamma, loss)), 1e-5);
  EXPECT_LE(max_abs_diff(back.grad_beta, numeric_grad(s.beta, loss)), 1e-5);
}

TEST(BatchNorm, InferBackwardMatchesFiniteDifferences) {
  Rng rng(6);
  BatchNormState s = BatchNormState::identity(3);
  s.gamma = {0.4, 1.2, -2.0};
  s.running_var = {0.5, 3.0, 1.5};
  s.batches_seen = 1;
  auto x = random_matrix(2, 3, rng);
  const auto w = random_matrix(2, 3, rng);
  const auto analytic = bn_infer_backward(w, s);
  const auto numeric =
      numeric_grad(x.data(), [&] { return weighted_sum(bn_forward_infer(x, s), w); });
  EXPECT_LE(max_abs_diff(analytic.data(), numeric), 1e-5);
}

TEST(BatchNorm, TrainedSignsAreBalancedPerColumn) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = BatchNormState::identity(8);
    const auto x = random_matrix(32, 8, rng, 3.0);
    const auto out = bn_forward_train(x, s).output;
    const auto codes = sign_forward(out);
    for (std::size_t c = 0; c < 8; ++c) {
      double sum = 0.0;
      int pos = 0;
      for (std::size_t r = 0; r < 32; ++r) {
        sum += out(r, c);
        pos += codes(r, c) > 0;
      }
      ASSERT_LE(std::abs(sum), 1e-6 * 32);
      ASSERT_GT(pos, 0);
      ASSERT_LT(pos, 32);
    }
  }
}

TEST(BatchNorm, StateValidation) {
  auto s = BatchNormState::identity(2);
  s.running_var[1] = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = BatchNormState::identity(2);
  s.beta.pop_back();
  EXPECT_THROW(s.validate(), DimensionError);
}

}  // namespace
}  // namespace binvfl
