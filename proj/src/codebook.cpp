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

#include "binvfl/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "binvfl/random.hpp"

namespace binvfl {

namespace {

void check_code_pair(std::span<const double> h1, std::span<const double> h2) {
  if (h1.size() != h2.size()) {
    throw DimensionError("code length mismatch: " + std::to_string(h1.size()) + " vs " +
                         std::to_string(h2.size()));
  }
  if (h1.empty()) throw std::invalid_argument("empty code");
  for (std::size_t i = 0; i < h1.size(); ++i) {
    if ((h1[i] != 1.0 && h1[i] != -1.0) || (h2[i] != 1.0 && h2[i] != -1.0)) {
      throw std::invalid_argument("non-binary code entry at position " + std::to_string(i));
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

void Codebook::validate() const {
  if (codes.rows() != classes || codes.cols() != code_length) {
    throw DimensionError("codebook shape " + shape_string(codes) + " does not match " +
                         std::to_string(classes) + "x" + std::to_string(code_length));
  }
  for (double v : codes.data()) {
    if (v != 1.0 && v != -1.0) throw std::invalid_argument("codebook entry is not +/-1");
  }
  for (std::size_t a = 0; a < classes; ++a) {
    for (std::size_t b = a + 1; b < classes; ++b) {
      if (std::equal(codes.row(a).begin(), codes.row(a).end(), codes.row(b).begin())) {
        throw std::invalid_argument("codebook rows " + std::to_string(a) + " and " +
                                    std::to_string(b) + " coincide");
      }
    }
  }
}

std::size_t code_length(std::size_t classes) {
  if (classes < 2) throw std::invalid_argument("code_length: need at least 2 classes");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < classes) ++bits;
  return bits;
}

Codebook generate_codebook(std::size_t classes, std::size_t code_length, std::uint64_t seed) {
  if (classes < 1) throw std::invalid_argument("generate_codebook: no classes");
  if (code_length == 0) throw std::invalid_argument("generate_codebook: zero code length");
  if (code_length < 63 && (std::uint64_t{1} << code_length) < classes) {
    throw std::invalid_argument("generate_codebook: 2^" + std::to_string(code_length) +
                                " < " + std::to_string(classes) + " classes");
  }
  Rng rng(seed);
  Codebook cb;
  cb.classes = classes;
  cb.code_length = code_length;
  cb.seed = seed;
  cb.codes = Matrix(classes, code_length);
  for (std::size_t c = 0; c < classes; ++c) {
    auto row = cb.codes.row(c);
    bool duplicate = true;
    while (duplicate) {
      for (auto& bit : row) bit = rng.bernoulli(0.5) ? 1.0 : -1.0;
      duplicate = false;
      for (std::size_t prev = 0; prev < c && !duplicate; ++prev) {
        duplicate = std::equal(row.begin(), row.end(), cb.codes.row(prev).begin());
      }
    }
  }
  return cb;
}

std::size_t hamming(std::span<const double> h1, std::span<const double> h2) {
  check_code_pair(h1, h2);
  const double d = static_cast<double>(h1.size());
  return static_cast<std::size_t>(std::lround((d - dot(h1, h2)) / 2.0));
}

double cosine_binary(std::span<const double> h1, std::span<const double> h2) {
  check_code_pair(h1, h2);
  return dot(h1, h2) / static_cast<double>(h1.size());
}

Matrix target_codes(std::span<const int> labels, const Codebook& cb) {
  Matrix out(labels.size(), cb.code_length);
  for (std::size_t u = 0; u < labels.size(); ++u) {
    const int y = labels[u];
    if (y < 0 || static_cast<std::size_t>(y) >= cb.classes) {
      throw std::out_of_range("target_codes: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(cb.classes) + ")");
    }
    auto src = cb.code(static_cast<std::size_t>(y));
    std::copy(src.begin(), src.end(), out.row(u).begin());
  }
  return out;
}

OrthogonalityReport orthogonality_report(const Codebook& cb) {
  if (cb.classes < 2) throw std::invalid_argument("orthogonality_report: need >= 2 classes");
  OrthogonalityReport rep;
  std::size_t orthogonal = 0;
  for (std::size_t a = 0; a < cb.classes; ++a) {
    for (std::size_t b = a + 1; b < cb.classes; ++b) {
      const double cos = cosine_binary(cb.code(a), cb.code(b));
      rep.mean_cos += cos;
      rep.mean_abs_cos += std::abs(cos);
      rep.max_abs_cos = std::max(rep.max_abs_cos, std::abs(cos));
      if (cos == 0.0) ++orthogonal;
      ++rep.pairs;
    }
  }
  const double n = static_cast<double>(rep.pairs);
  rep.mean_cos /= n;
  rep.mean_abs_cos /= n;
  rep.orthogonal_fraction = static_cast<double>(orthogonal) / n;
  return rep;
}

double orthogonal_pair_probability(std::size_t n, double p) {
  if (n == 0 || n % 2 == 1) return 0.0;
  const double q = p * p + (1.0 - p) * (1.0 - p);
  const std::size_t half = n / 2;
  double binom = 1.0;
  for (std::size_t i = 1; i <= half; ++i) {
    binom = binom * static_cast<double>(n - half + i) / static_cast<double>(i);
  }
  return binom * std::pow(q, static_cast<double>(half)) *
         std::pow(1.0 - q, static_cast<double>(half));
}

}  // namespace binvfl
