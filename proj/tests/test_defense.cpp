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
#include <limits>
#include <sstream>

#include "binvfl/defense.hpp"
#include "binvfl/hash_layer.hpp"
#include "test_support.hpp"

namespace binvfl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Trained {
  AlignedDataset ds;
  VflSystem sys;
  Subset test;
};

Trained trained_system(std::size_t classes, std::size_t d, std::size_t parties = 2) {
  Trained t;
  t.ds = synth_blobs({classes, 80, 6, 4.0, 21});
  std::vector<double> ratios(parties, 1.0 / static_cast<double>(parties));
  t.ds.partition = vertical_split(6, ratios);
  t.ds = train_test_split(t.ds, 0.7, 22);
  SystemSpec spec;
  spec.classes = classes;
  spec.code_length = d;
  spec.partition = t.ds.partition;
  spec.bottom_hidden = {16};
  spec.top_hidden = 16;
  spec.seed = 23;
  t.sys = make_system(spec);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 32;
  train(t.sys, t.ds, cfg);
  t.test = take_rows(t.ds, t.ds.test_rows());
  return t;
}

TEST(Detect, ThresholdIsStrict) {
  const auto policy = DetectionPolicy::for_length(4);
  EXPECT_EQ(policy.threshold, 2u);
  const std::vector<std::vector<double>> same = {{1, 1, -1, 1}, {1, 1, -1, 1}};
  const std::vector<std::vector<double>> two = {{1, 1, -1, 1}, {-1, -1, -1, 1}};
  const std::vector<std::vector<double>> three = {{1, 1, -1, 1}, {-1, -1, 1, 1}};
  EXPECT_FALSE(detect_abnormal(same, policy).flagged);
  EXPECT_EQ(detect_abnormal(two, policy).max_distance, 2u);
  EXPECT_FALSE(detect_abnormal(two, policy).flagged);
  EXPECT_TRUE(detect_abnormal(three, policy).flagged);
}

TEST(Detect, PairwiseTakesTheWorstPair) {
  const auto policy = DetectionPolicy::for_length(4);
  const std::vector<std::vector<double>> codes = {
      {1, 1, 1, 1}, {1, 1, 1, -1}, {-1, -1, -1, 1}};
  EXPECT_EQ(detect_abnormal(codes, policy).max_distance, 4u);
}

TEST(Detect, AgainstCodebookReference) {
  const auto policy = DetectionPolicy::for_length(4, DetectionReference::kAgainstCodebook);
  const std::vector<double> ref = {1, 1, 1, 1};
  const std::vector<std::vector<double>> codes = {{1, 1, 1, -1}, {-1, -1, -1, 1}};
  EXPECT_EQ(detect_abnormal(codes, policy, ref).max_distance, 3u);
  EXPECT_TRUE(detect_abnormal(codes, policy, ref).flagged);
  EXPECT_THROW(detect_abnormal(codes, policy), DimensionError);
}

TEST(Detect, RejectsBadInput) {
  const auto policy = DetectionPolicy::for_length(2);
  const std::vector<std::vector<double>> one = {{1, 1}};
  const std::vector<std::vector<double>> mixed = {{1, 1}, {1, 1, 1}};
  EXPECT_THROW(detect_abnormal(one, policy), std::invalid_argument);
  EXPECT_THROW(detect_abnormal(mixed, policy), DimensionError);
  DetectionPolicy bad{2, 3};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Detect, RatesAreFractionsAndDeterministic) {
  auto t = trained_system(4, 6);
  const auto policy = DetectionPolicy::for_length(6);
  const auto a = detection_rates(t.sys, t.test.features, policy, 3);
  const auto b = detection_rates(t.sys, t.test.features, policy, 3);
  EXPECT_EQ(a.honest, b.honest);
  EXPECT_EQ(a.random_party, b.random_party);
  for (double r : {a.honest, a.random_party}) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

TEST(Audit, ObservedCountsCoverEverySample) {
  auto t = trained_system(3, 4);
  const auto table = consistency_audit(t.sys, t.test.features, t.test.labels);
  ASSERT_EQ(table.classes.size(), 3u);
  std::size_t total = 0;
  for (const auto& c : table.classes) {
    total += c.correct_count + c.wrong_count;
    for (const auto& cell : {c.correct, c.wrong}) {
      if (cell) {
        EXPECT_GE(*cell, 0.0);
        EXPECT_LE(*cell, 4.0);
      }
    }
    EXPECT_EQ(c.correct.has_value(), c.correct_count > 0);
  }
  EXPECT_EQ(total, t.test.labels.size());
}

TEST(Audit, FixedReferenceEnumeratesAllParticipantCodes) {
  auto t = trained_system(4, 5);
  const auto table = consistency_audit(t.sys, t.test.features, t.test.labels,
                                       AuditMode::kFixedReference);
  for (const auto& c : table.classes) EXPECT_EQ(c.correct_count + c.wrong_count, 32u);
  // The participant code equal to o_c has distance 0; if it is classified
  // correctly the correct mean is below the maximum possible.
  ASSERT_TRUE(table.pooled_correct || table.pooled_wrong);
  auto three = trained_system(3, 2, 3);
  EXPECT_THROW(consistency_audit(three.sys, three.test.features, three.test.labels,
                                 AuditMode::kFixedReference),
               std::invalid_argument);
}

TEST(Audit, CsvLayout) {
  AuditTable table;
  table.classes.push_back({0, 1.5, std::nullopt, 2, 0});
  table.classes.push_back({1, 0.5, 3.0, 1, 4});
  table.average_correct = 1.0;
  table.average_wrong = 3.0;
  std::ostringstream out;
  table.write_csv(out);
  EXPECT_EQ(out.str(),
            "class,correct,correct_count,wrong,wrong_count\n"
            "0,1.5,2,-,0\n"
            "1,0.5,1,3,4\n"
            "avg,1,3,3,4\n");
}

TEST(Dp, InfiniteEpsilonIsIdentity) {
  Rng rng(1);
  const auto codes = testing::random_codes(10, 8, rng);
  EXPECT_EQ(dp_binarize(codes, {kInf, 2.0}, 5), codes);
  EXPECT_THROW(dp_binarize(codes, {0.0, 2.0}, 5), std::invalid_argument);
  EXPECT_THROW(dp_binarize(codes, {-1.0, 2.0}, 5), std::invalid_argument);
  EXPECT_THROW(dp_binarize(codes, {NAN, 2.0}, 5), std::invalid_argument);
}

TEST(Dp, EmpiricalFlipRateMatchesFormula) {
  Rng rng(2);
  const auto codes = testing::random_codes(500, 200, rng);
  for (double eps : {0.5, 1.0, 2.0, 5.0}) {
    const auto noisy = dp_binarize(codes, {eps, 2.0}, 100 + static_cast<std::uint64_t>(eps * 10));
    EXPECT_TRUE(is_binary_code(noisy));
    std::size_t flips = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) flips += noisy.data()[i] != codes.data()[i];
    const double n = static_cast<double>(codes.size());
    const double p = flip_probability(eps);
    EXPECT_NEAR(flips / n, p, 4.0 * std::sqrt(p * (1 - p) / n)) << "eps=" << eps;
  }
}

TEST(Dp, ClosedForms) {
  EXPECT_NEAR(flip_probability(2.0), 0.5 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(approximate_dp_delta(2.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_LT(flip_probability(10.0), flip_probability(1.0));
  EXPECT_THROW(flip_probability(0.0), std::invalid_argument);
  EXPECT_THROW(approximate_dp_delta(-2.0), std::invalid_argument);
}

TEST(Dp, FlipCountPmfIsBinomial) {
  const double eps = 1.0;
  const double p = flip_probability(eps);
  double total = 0.0;
  for (std::size_t k = 0; k <= 8; ++k) total += flip_count_pmf(8, k, eps);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(flip_count_pmf(8, 0, eps), std::pow(1 - p, 8), 1e-15);
  EXPECT_NEAR(flip_count_pmf(4, 2, eps), 6 * p * p * (1 - p) * (1 - p), 1e-15);
  // Brute force over all 2^6 flip patterns.
  for (std::size_t k = 0; k <= 6; ++k) {
    double brute = 0.0;
    for (unsigned m = 0; m < 64; ++m) {
      if (static_cast<std::size_t>(__builtin_popcount(m)) == k)
        brute += std::pow(p, k) * std::pow(1 - p, 6 - k);
    }
    EXPECT_NEAR(flip_count_pmf(6, k, eps), brute, 1e-14);
  }
  EXPECT_THROW(flip_count_pmf(3, 4, eps), std::out_of_range);
}

TEST(Dp, SweepAppendsBaselineAndWritesCsv) {
  auto t = trained_system(2, 4);
  const double eps[] = {0.1, 1.0, 10.0};
  const auto table = dp_sweep(t.sys, t.test.features, t.test.labels, eps, 9, 3);
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_TRUE(std::isinf(table.rows.back().epsilon));
  EXPECT_EQ(table.rows.back().accuracy_std, 0.0);
  EXPECT_DOUBLE_EQ(table.rows.back().accuracy,
                   accuracy(predict(t.sys, t.test.features), t.test.labels));
  EXPECT_LE(table.rows.front().accuracy, table.rows.back().accuracy);
  std::ostringstream out;
  table.write_csv(out);
  const std::string csv = out.str();
  EXPECT_EQ(csv.rfind("epsilon,accuracy,accuracy_std,flip_probability,delta,runs\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(csv.find("\ninf,"), std::string::npos);

  const double with_inf[] = {1.0, kInf};
  EXPECT_EQ(dp_sweep(t.sys, t.test.features, t.test.labels, with_inf, 9).rows.size(), 2u);
}

}  // namespace
}  // namespace binvfl
