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
#include <span>

#include "binvfl/tensor.hpp"

namespace binvfl {

// Pre-defined per-class target codes: one row of +/-1 per class.
struct Codebook {
  std::size_t classes = 0;
  std::size_t code_length = 0;
  Matrix codes;
  std::uint64_t seed = 0;

  std::span<const double> code(std::size_t c) const { return codes.row(c); }

  // Checks the invariants: entries +/-1, shape, pairwise distinct rows.
  void validate() const;
};

// Minimum code length able to give every class its own code: ceil(log2 C).
std::size_t code_length(std::size_t classes);

// Bits drawn i.i.d. with P(+1) = 1/2; a row that repeats an earlier row is
// redrawn. Deterministic per seed.
Codebook generate_codebook(std::size_t classes, std::size_t code_length, std::uint64_t seed);

// Number of differing positions, computed as (d - h1.h2) / 2.
std::size_t hamming(std::span<const double> h1, std::span<const double> h2);

// h1.h2 / d for +/-1 codes; equals 1 - 2 * hamming / d.
double cosine_binary(std::span<const double> h1, std::span<const double> h2);

// Row u of the result is the code of labels[u].
Matrix target_codes(std::span<const int> labels, const Codebook& cb);

struct OrthogonalityReport {
  std::size_t pairs = 0;
  double mean_cos = 0.0;
  double mean_abs_cos = 0.0;
  double max_abs_cos = 0.0;
  double orthogonal_fraction = 0.0;
};

OrthogonalityReport orthogonality_report(const Codebook& cb);

// Probability that two independent length-n codes with P(+1) = p are exactly
// orthogonal: binom(n, n/2) q^(n/2) (1-q)^(n/2), q = p^2 + (1-p)^2. Zero for
// odd n.
double orthogonal_pair_probability(std::size_t n, double p = 0.5);

}  // namespace binvfl
