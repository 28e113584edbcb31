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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "binvfl/protocol.hpp"
#include "binvfl/random.hpp"
#include "binvfl/tensor.hpp"

namespace binvfl {

// ---- abnormal-input detection ---------------------------------------------

enum class DetectionReference { kPairwise, kAgainstCodebook };

struct DetectionPolicy {
  std::size_t code_length = 0;
  std::size_t threshold = 0;
  DetectionReference reference = DetectionReference::kPairwise;

  // threshold = floor(d / 2).
  static DetectionPolicy for_length(std::size_t code_length,
                                    DetectionReference reference = DetectionReference::kPairwise);
  void validate() const;
};

struct Detection {
  bool flagged = false;
  std::size_t max_distance = 0;
};

// Flags a sample when the largest Hamming distance among the submitted codes
// (or between each code and `reference` for kAgainstCodebook) is strictly
// greater than the threshold.
Detection detect_abnormal(std::span<const std::vector<double>> codes, const DetectionPolicy& policy,
                          std::span<const double> reference = {});

struct DetectionRates {
  double honest = 0.0;
  // One party replaced by uniformly random codes.
  double random_party = 0.0;
};

DetectionRates detection_rates(const VflSystem& system, const Matrix& features,
                               const DetectionPolicy& policy, std::uint64_t seed);

// ---- consistency audit -----------------------------------------------------

enum class AuditMode {
  // Mean pairwise Hamming between the parties' real codes per test sample.
  kObserved,
  // Two parties. The initiator submits its class code o_c; every possible
  // participant code is scored by the top model. Distances are to o_c.
  kFixedReference,
};

struct ClassAudit {
  int label = 0;
  std::optional<double> correct;  // empty: no such predictions
  std::optional<double> wrong;
  std::size_t correct_count = 0;
  std::size_t wrong_count = 0;
};

struct AuditTable {
  AuditMode mode = AuditMode::kObserved;
  std::vector<ClassAudit> classes;
  // Means over the classes where the cell is present.
  std::optional<double> average_correct;
  std::optional<double> average_wrong;
  // Means over all scored samples.
  std::optional<double> pooled_correct;
  std::optional<double> pooled_wrong;

  // class,correct,correct_count,wrong,wrong_count with "-" for absent cells
  // and a final "avg" row.
  void write_csv(std::ostream& out) const;
};

AuditTable consistency_audit(const VflSystem& system, const Matrix& features,
                             std::span<const int> labels, AuditMode mode = AuditMode::kObserved);

// ---- output-code differential privacy --------------------------------------

struct DpParams {
  double epsilon = 1.0;  // +inf disables the noise
  double sensitivity = 2.0;

  void validate() const;
};

// sign(h + Lap(sensitivity / epsilon)) elementwise.
Matrix dp_binarize(const Matrix& codes, const DpParams& dp, Rng& rng);
Matrix dp_binarize(const Matrix& codes, const DpParams& dp, std::uint64_t seed);

// Probability that one bit changes sign: exp(-epsilon / 2) / 2.
double flip_probability(double epsilon);

// delta of the (epsilon, delta) guarantee of the binarized release.
double approximate_dp_delta(double epsilon);

// Binomial probability of exactly k flipped bits among n.
double flip_count_pmf(std::size_t n, std::size_t k, double epsilon);

struct DpSweepRow {
  double epsilon = 0.0;
  double accuracy = 0.0;
  double accuracy_std = 0.0;
  int runs = 0;
};

struct DpSweepTable {
  std::vector<DpSweepRow> rows;

  // epsilon,accuracy,accuracy_std,flip_probability,delta,runs
  void write_csv(std::ostream& out) const;
};

// Accuracy with every party's codes passed through dp_binarize, averaged over
// `runs` noise draws. An infinite-epsilon baseline row is appended when the
// list lacks one.
DpSweepTable dp_sweep(const VflSystem& system, const Matrix& features, std::span<const int> labels,
                      std::span<const double> epsilons, std::uint64_t seed, int runs = 3);

}  // namespace binvfl
