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

#include "binvfl/defense.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <string>

#include "binvfl/codebook.hpp"
#include "binvfl/dense.hpp"
#include "binvfl/hash_layer.hpp"

namespace binvfl {

DetectionPolicy DetectionPolicy::for_length(std::size_t code_length, DetectionReference reference) {
  DetectionPolicy p{code_length, code_length / 2, reference};
  return p;
}

void DetectionPolicy::validate() const {
  if (code_length == 0) throw std::invalid_argument("DetectionPolicy: code_length must be > 0");
  if (threshold > code_length) {
    throw std::invalid_argument("DetectionPolicy: threshold " + std::to_string(threshold) +
                                " exceeds code length " + std::to_string(code_length));
  }
}

Detection detect_abnormal(std::span<const std::vector<double>> codes, const DetectionPolicy& policy,
                          std::span<const double> reference) {
  policy.validate();
  if (codes.size() < 2) throw std::invalid_argument("detect_abnormal: need at least two parties");
  for (const auto& c : codes) {
    if (c.size() != policy.code_length) {
      throw DimensionError("detect_abnormal: code length " + std::to_string(c.size()) +
                           " != " + std::to_string(policy.code_length));
    }
  }
  Detection out;
  if (policy.reference == DetectionReference::kAgainstCodebook) {
    if (reference.size() != policy.code_length) {
      throw DimensionError("detect_abnormal: reference code has the wrong length");
    }
    for (const auto& c : codes) out.max_distance = std::max(out.max_distance, hamming(c, reference));
  } else {
    for (std::size_t i = 0; i < codes.size(); ++i) {
      for (std::size_t j = i + 1; j < codes.size(); ++j) {
        out.max_distance = std::max(out.max_distance, hamming(codes[i], codes[j]));
      }
    }
  }
  // The threshold may be 0 for d = 1, in which case any disagreement is flagged.
  out.flagged = out.max_distance > policy.threshold;
  return out;
}

namespace {

std::vector<std::vector<double>> sample_codes(std::span<const Matrix> blocks, std::size_t row) {
  std::vector<std::vector<double>> out;
  for (const auto& b : blocks) out.emplace_back(b.row(row).begin(), b.row(row).end());
  return out;
}

double mean_pairwise_hamming(const std::vector<std::vector<double>>& codes) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = i + 1; j < codes.size(); ++j) {
      sum += static_cast<double>(hamming(codes[i], codes[j]));
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace

DetectionRates detection_rates(const VflSystem& system, const Matrix& features,
                               const DetectionPolicy& policy, std::uint64_t seed) {
  if (features.rows() == 0) throw std::invalid_argument("detection_rates: no rows");
  auto blocks = encode_all(system, features);
  Rng rng(seed);
  Matrix forged(features.rows(), system.server.code_length);
  for (auto& v : forged.data()) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const std::size_t victim = rng.index(blocks.size());

  std::size_t honest = 0, forged_flags = 0;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto codes = sample_codes(blocks, r);
    honest += detect_abnormal(codes, policy).flagged;
    codes[victim].assign(forged.row(r).begin(), forged.row(r).end());
    forged_flags += detect_abnormal(codes, policy).flagged;
  }
  const double n = static_cast<double>(features.rows());
  return {static_cast<double>(honest) / n, static_cast<double>(forged_flags) / n};
}

void AuditTable::write_csv(std::ostream& out) const {
  auto cell = [&](const std::optional<double>& v) {
    if (v) {
      out << std::setprecision(10) << *v;
    } else {
      out << '-';
    }
  };
  out << "class,correct,correct_count,wrong,wrong_count\n";
  std::size_t correct_total = 0, wrong_total = 0;
  for (const auto& c : classes) {
    out << c.label << ',';
    cell(c.correct);
    out << ',' << c.correct_count << ',';
    cell(c.wrong);
    out << ',' << c.wrong_count << '\n';
    correct_total += c.correct_count;
    wrong_total += c.wrong_count;
  }
  out << "avg,";
  cell(average_correct);
  out << ',' << correct_total << ',';
  cell(average_wrong);
  out << ',' << wrong_total << '\n';
}

namespace {

struct Accumulator {
  double sum = 0.0;
  std::size_t count = 0;

  void add(double v) {
    sum += v;
    ++count;
  }
  std::optional<double> mean() const {
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  }
};

AuditTable finish(AuditMode mode, const std::vector<Accumulator>& correct,
                  const std::vector<Accumulator>& wrong) {
  AuditTable table;
  table.mode = mode;
  Accumulator avg_c, avg_w, pool_c, pool_w;
  for (std::size_t c = 0; c < correct.size(); ++c) {
    ClassAudit row;
    row.label = static_cast<int>(c);
    row.correct = correct[c].mean();
    row.wrong = wrong[c].mean();
    row.correct_count = correct[c].count;
    row.wrong_count = wrong[c].count;
    if (row.correct) avg_c.add(*row.correct);
    if (row.wrong) avg_w.add(*row.wrong);
    pool_c.sum += correct[c].sum;
    pool_c.count += correct[c].count;
    pool_w.sum += wrong[c].sum;
    pool_w.count += wrong[c].count;
    table.classes.push_back(row);
  }
  table.average_correct = avg_c.mean();
  table.average_wrong = avg_w.mean();
  table.pooled_correct = pool_c.mean();
  table.pooled_wrong = pool_w.mean();
  return table;
}

}  // namespace

AuditTable consistency_audit(const VflSystem& system, const Matrix& features,
                             std::span<const int> labels, AuditMode mode) {
  const auto& server = system.server;
  if (!server.trained) throw std::logic_error("consistency_audit: system not trained");
  if (system.parties.size() < 2) throw std::invalid_argument("consistency_audit: need >= 2 parties");
  const std::size_t classes = server.classes();
  std::vector<Accumulator> correct(classes), wrong(classes);

  if (mode == AuditMode::kObserved) {
    if (features.rows() != labels.size()) throw DimensionError("consistency_audit: rows/labels mismatch");
    const auto blocks = encode_all(system, features);
    const auto preds = predict_from_codes(server, server_aggregate(blocks));
    for (std::size_t r = 0; r < features.rows(); ++r) {
      const int y = labels[r];
      if (y < 0 || static_cast<std::size_t>(y) >= classes) {
        throw std::out_of_range("consistency_audit: label out of range");
      }
      const double dist = mean_pairwise_hamming(sample_codes(blocks, r));
      (preds[r] == y ? correct : wrong)[static_cast<std::size_t>(y)].add(dist);
    }
    return finish(mode, correct, wrong);
  }

  if (system.parties.size() != 2) {
    throw std::invalid_argument("consistency_audit: fixed-reference mode needs exactly two parties");
  }
  const std::size_t d = server.code_length;
  if (d > 20) throw std::invalid_argument("consistency_audit: code too long to enumerate");
  const std::size_t combos = std::size_t{1} << d;
  Matrix submitted(combos, 2 * d);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto reference = server.codebook.code(c);
    for (std::size_t m = 0; m < combos; ++m) {
      auto row = submitted.row(m);
      std::copy(reference.begin(), reference.end(), row.begin());
      for (std::size_t b = 0; b < d; ++b) row[d + b] = (m >> b) & 1U ? 1.0 : -1.0;
    }
    const auto preds = predict_from_codes(server, submitted);
    for (std::size_t m = 0; m < combos; ++m) {
      const auto row = submitted.row(m);
      const double dist = static_cast<double>(hamming(row.subspan(0, d), row.subspan(d, d)));
      (preds[m] == static_cast<int>(c) ? correct : wrong)[c].add(dist);
    }
  }
  return finish(mode, correct, wrong);
}

void DpParams::validate() const {
  if (std::isnan(epsilon) || epsilon <= 0.0) {
    throw std::invalid_argument("DpParams: epsilon must be positive");
  }
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw std::invalid_argument("DpParams: sensitivity must be positive and finite");
  }
}

Matrix dp_binarize(const Matrix& codes, const DpParams& dp, Rng& rng) {
  dp.validate();
  if (std::isinf(dp.epsilon)) return codes;
  const double scale = dp.sensitivity / dp.epsilon;
  Matrix out = codes;
  for (auto& v : out.data()) v = sign_value(v + rng.laplace(scale));
  return out;
}

Matrix dp_binarize(const Matrix& codes, const DpParams& dp, std::uint64_t seed) {
  Rng rng(seed);
  return dp_binarize(codes, dp, rng);
}

double flip_probability(double epsilon) {
  if (std::isnan(epsilon) || epsilon <= 0.0) {
    throw std::invalid_argument("flip_probability: epsilon must be positive");
  }
  return 0.5 * std::exp(-epsilon / 2.0);
}

double approximate_dp_delta(double epsilon) {
  if (std::isnan(epsilon) || epsilon <= 0.0) {
    throw std::invalid_argument("approximate_dp_delta: epsilon must be positive");
  }
  return 1.0 - std::exp(-epsilon / 2.0);
}

double flip_count_pmf(std::size_t n, std::size_t k, double epsilon) {
  if (k > n) {
    throw std::out_of_range("flip_count_pmf: k = " + std::to_string(k) + " exceeds n = " +
                            std::to_string(n));
  }
  const double p = flip_probability(epsilon);
  double binom = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    binom *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return binom * std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
}

void DpSweepTable::write_csv(std::ostream& out) const {
  out << "epsilon,accuracy,accuracy_std,flip_probability,delta,runs\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    if (std::isinf(r.epsilon)) {
      out << "inf," << r.accuracy << ',' << r.accuracy_std << ",0,1," << r.runs << '\n';
    } else {
      out << r.epsilon << ',' << r.accuracy << ',' << r.accuracy_std << ','
          << flip_probability(r.epsilon) << ',' << approximate_dp_delta(r.epsilon) << ','
          << r.runs << '\n';
    }
  }
}

DpSweepTable dp_sweep(const VflSystem& system, const Matrix& features, std::span<const int> labels,
                      std::span<const double> epsilons, std::uint64_t seed, int runs) {
  if (!system.server.trained) throw std::logic_error("dp_sweep: system not trained");
  if (runs < 1) throw std::invalid_argument("dp_sweep: runs must be >= 1");
  if (features.rows() != labels.size()) throw DimensionError("dp_sweep: rows/labels mismatch");
  std::vector<double> eps(epsilons.begin(), epsilons.end());
  if (std::none_of(eps.begin(), eps.end(), [](double e) { return std::isinf(e); })) {
    eps.push_back(std::numeric_limits<double>::infinity());
  }
  const auto clean = encode_all(system, features);
  DpSweepTable table;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const DpParams dp{eps[i], 2.0};
    dp.validate();
    Rng rng(seed + 7919 * i);
    std::vector<double> accs;
    for (int run = 0; run < runs; ++run) {
      std::vector<Matrix> noisy;
      for (const auto& block : clean) noisy.push_back(dp_binarize(block, dp, rng));
      accs.push_back(accuracy(predict_from_codes(system.server, server_aggregate(noisy)), labels));
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(runs);
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    var /= static_cast<double>(runs);
    table.rows.push_back({eps[i], mean, std::sqrt(var), runs});
  }
  return table;
}

}  // namespace binvfl
