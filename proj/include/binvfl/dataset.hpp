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
#include <span>
#include <string>
#include <vector>

#include "binvfl/tensor.hpp"

namespace binvfl {

using FeaturePartition = std::vector<std::vector<std::size_t>>;

// Samples aligned across parties. Every row has one label; `partition`
// assigns each party a disjoint set of feature columns; `train_mask` marks
// training rows (the rest are test rows).
struct AlignedDataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  FeaturePartition partition;
  std::vector<std::uint8_t> train_mask;
  std::vector<std::string> ids;
  // Side length for square images flattened row-major; 0 for tabular data.
  std::size_t image_side = 0;

  std::size_t rows() const { return features.rows(); }
  std::vector<std::size_t> train_rows() const;
  std::vector<std::size_t> test_rows() const;
  std::vector<std::size_t> class_counts(bool train_only) const;

  void validate() const;
};

struct Subset {
  Matrix features;
  std::vector<int> labels;
};

Subset take_rows(const AlignedDataset& ds, std::span<const std::size_t> rows);

// One party's table keyed by sample id; at most one source carries labels.
struct SourceTable {
  std::vector<std::string> ids;
  Matrix features;
  std::optional<std::vector<int>> labels;
};

// Restricts every source to the common ids (sorted), concatenates their
// columns, and records one partition block per source. All rows start as
// training rows.
AlignedDataset align(std::span<const SourceTable> sources);

// Contiguous blocks sized by rounded ratios; the last party absorbs rounding.
FeaturePartition vertical_split(std::size_t total_features, std::span<const double> ratios);

// Pixel-column blocks of a side x side image, left to right; party i's block
// ends at ceil(side * cumulative_ratio_i). Columns are flattened row-major
// indices.
FeaturePartition image_center_split(std::size_t side, std::span<const double> ratios);

void check_partition(const FeaturePartition& partition, std::size_t total_features);

// Duplicates training rows (sampled with replacement inside each minority
// class) until every class matches the largest class. Test rows untouched.
AlignedDataset oversample_balance(const AlignedDataset& ds, std::uint64_t seed);

// Seeded shuffle, then the first round(ratio * n) shuffled rows become
// training rows.
AlignedDataset train_test_split(const AlignedDataset& ds, double ratio, std::uint64_t seed);

struct BlobSpec {
  std::size_t classes = 2;
  std::size_t n_per_class = 200;
  std::size_t dim = 8;
  double separation = 4.0;
  std::uint64_t seed = 0;
  // Added to every feature; a large offset leaves the data uncentred.
  double offset = 0.0;
};

// Unit-covariance Gaussian clusters whose means are pairwise at least
// `separation` apart.
AlignedDataset synth_blobs(const BlobSpec& spec);

struct ImageSpec {
  std::size_t classes = 4;
  std::size_t n_per_class = 100;
  std::size_t side = 12;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

// Per-class stroke glyph plus Gaussian pixel noise, clamped to [0, 1].
AlignedDataset synth_images(const ImageSpec& spec);

// Noise-free glyph for one class (side x side, row-major).
std::vector<double> glyph_template(std::size_t cls, std::size_t side);

struct CsvOptions {
  std::string label_column = "label";
  std::vector<std::string> drop_columns;
  double train_ratio = 0.7;
  std::uint64_t seed = 0;
  bool standardize = true;
};

// Header row required. A column named "id" becomes the row id. Labels are
// mapped to indices in sorted order of their distinct values. Features are
// standardized with training-row statistics.
AlignedDataset load_csv(const std::string& path, const CsvOptions& options);

// Same, reading from an in-memory CSV document.
AlignedDataset parse_csv(const std::string& text, const CsvOptions& options);

}  // namespace binvfl
