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

#include "binvfl/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "binvfl/random.hpp"

namespace binvfl {

std::vector<std::size_t> AlignedDataset::train_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < train_mask.size(); ++r) {
    if (train_mask[r]) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> AlignedDataset::test_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < train_mask.size(); ++r) {
    if (!train_mask[r]) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> AlignedDataset::class_counts(bool train_only) const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (!train_only || train_mask[r]) ++counts[static_cast<std::size_t>(labels[r])];
  }
  return counts;
}

void AlignedDataset::validate() const {
  if (labels.size() != features.rows()) throw DimensionError("dataset: labels/rows mismatch");
  if (train_mask.size() != features.rows()) throw DimensionError("dataset: split mask/rows mismatch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw std::out_of_range("dataset: label " + std::to_string(y) + " out of range");
    }
  }
  if (!partition.empty()) check_partition(partition, features.cols());
}

Subset take_rows(const AlignedDataset& ds, std::span<const std::size_t> rows) {
  Subset s;
  s.features = select_rows(ds.features, rows);
  s.labels.reserve(rows.size());
  for (auto r : rows) s.labels.push_back(ds.labels[r]);
  return s;
}

AlignedDataset align(std::span<const SourceTable> sources) {
  if (sources.empty()) throw std::invalid_argument("align: no sources");
  std::vector<std::unordered_map<std::string, std::size_t>> index(sources.size());
  const SourceTable* label_source = nullptr;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& src = sources[s];
    if (src.ids.size() != src.features.rows()) {
      throw DimensionError("align: source " + std::to_string(s) + " ids/rows mismatch");
    }
    for (std::size_t r = 0; r < src.ids.size(); ++r) {
      if (!index[s].emplace(src.ids[r], r).second) {
        throw std::invalid_argument("align: duplicate id '" + src.ids[r] + "' in source " +
                                    std::to_string(s));
      }
    }
    if (src.labels) {
      if (label_source) throw std::invalid_argument("align: more than one labelled source");
      if (src.labels->size() != src.ids.size()) {
        throw DimensionError("align: labels/ids mismatch in source " + std::to_string(s));
      }
      label_source = &src;
    }
  }
  if (!label_source) throw std::invalid_argument("align: no source carries labels");

  std::set<std::string> common(sources[0].ids.begin(), sources[0].ids.end());
  for (std::size_t s = 1; s < sources.size(); ++s) {
    std::set<std::string> next;
    for (const auto& id : sources[s].ids) {
      if (common.count(id)) next.insert(id);
    }
    common = std::move(next);
  }
  if (common.empty()) throw std::invalid_argument("align: sample-id intersection is empty");

  AlignedDataset ds;
  ds.ids.assign(common.begin(), common.end());
  std::vector<Matrix> blocks;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    std::vector<std::size_t> rows;
    rows.reserve(ds.ids.size());
    for (const auto& id : ds.ids) rows.push_back(index[s].at(id));
    blocks.push_back(select_rows(sources[s].features, rows));
    std::vector<std::size_t> cols(sources[s].features.cols());
    std::iota(cols.begin(), cols.end(), offset);
    offset += cols.size();
    ds.partition.push_back(std::move(cols));
    if (&sources[s] == label_source) {
      for (auto r : rows) ds.labels.push_back((*label_source->labels)[r]);
    }
  }
  ds.features = hconcat(blocks);
  int max_label = *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  ds.train_mask.assign(ds.ids.size(), 1);
  ds.validate();
  return ds;
}

namespace {

void check_ratios(std::span<const double> ratios) {
  if (ratios.empty()) throw std::invalid_argument("feature ratios: empty");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("feature ratios: each ratio must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument("feature ratios: sum to " + std::to_string(total) + ", not 1");
  }
}

}  // namespace

FeaturePartition vertical_split(std::size_t total_features, std::span<const double> ratios) {
  check_ratios(ratios);
  FeaturePartition out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    std::size_t size = 0;
    if (i + 1 == ratios.size()) {
      size = total_features > start ? total_features - start : 0;
    } else {
      size = static_cast<std::size_t>(std::lround(ratios[i] * static_cast<double>(total_features)));
      size = std::min(size, total_features > start ? total_features - start : 0);
    }
    if (size == 0) {
      throw std::invalid_argument("vertical_split: party " + std::to_string(i) +
                                  " would receive 0 columns");
    }
    std::vector<std::size_t> cols(size);
    std::iota(cols.begin(), cols.end(), start);
    start += size;
    out.push_back(std::move(cols));
  }
  return out;
}

FeaturePartition image_center_split(std::size_t side, std::span<const double> ratios) {
  check_ratios(ratios);
  FeaturePartition out;
  std::size_t start = 0;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    cumulative += ratios[i];
    std::size_t end = side;
    if (i + 1 < ratios.size()) {
      end = std::min(side, static_cast<std::size_t>(
                               std::ceil(static_cast<double>(side) * cumulative - 1e-9)));
    }
    if (end <= start) {
      throw std::invalid_argument("image_center_split: party " + std::to_string(i) +
                                  " would receive 0 pixel columns");
    }
    std::vector<std::size_t> cols;
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = start; c < end; ++c) cols.push_back(r * side + c);
    }
    out.push_back(std::move(cols));
    start = end;
  }
  return out;
}

void check_partition(const FeaturePartition& partition, std::size_t total_features) {
  std::vector<std::uint8_t> seen(total_features, 0);
  for (std::size_t p = 0; p < partition.size(); ++p) {
    if (partition[p].empty()) {
      throw std::invalid_argument("partition: party " + std::to_string(p) + " has no columns");
    }
    for (auto c : partition[p]) {
      if (c >= total_features) throw std::out_of_range("partition: column out of range");
      if (seen[c]) {
        throw std::invalid_argument("partition: column " + std::to_string(c) +
                                    " assigned to more than one party");
      }
      seen[c] = 1;
    }
  }
  for (std::size_t c = 0; c < total_features; ++c) {
    if (!seen[c]) throw std::invalid_argument("partition: column " + std::to_string(c) + " unassigned");
  }
}

AlignedDataset oversample_balance(const AlignedDataset& ds, std::uint64_t seed) {
  ds.validate();
  const auto counts = ds.class_counts(true);
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (auto r : ds.train_rows()) by_class[static_cast<std::size_t>(ds.labels[r])].push_back(r);
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("oversample_balance: class " + std::to_string(c) +
                                  " has no training rows");
    }
  }
  const std::size_t target = *std::max_element(counts.begin(), counts.end());
  Rng rng(seed);
  std::vector<std::size_t> extra;
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    for (std::size_t k = counts[c]; k < target; ++k) {
      extra.push_back(by_class[c][rng.index(by_class[c].size())]);
    }
  }
  if (extra.empty()) return ds;

  AlignedDataset out = ds;
  std::vector<std::size_t> all = iota_indices(ds.rows());
  all.insert(all.end(), extra.begin(), extra.end());
  out.features = select_rows(ds.features, all);
  out.labels.clear();
  out.train_mask.clear();
  out.ids.clear();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto r = all[i];
    out.labels.push_back(ds.labels[r]);
    out.train_mask.push_back(ds.train_mask[r]);
    std::string id = r < ds.ids.size() ? ds.ids[r] : std::to_string(r);
    if (i >= ds.rows()) id += "#dup" + std::to_string(i - ds.rows());
    out.ids.push_back(std::move(id));
  }
  return out;
}

AlignedDataset train_test_split(const AlignedDataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("train_test_split: ratio must lie in (0, 1)");
  }
  if (ds.rows() < 2) throw std::invalid_argument("train_test_split: fewer than 2 rows");
  auto order = iota_indices(ds.rows());
  Rng rng(seed);
  rng.shuffle(order);
  auto n_train = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(ds.rows())));
  n_train = std::clamp<std::size_t>(n_train, 1, ds.rows() - 1);
  AlignedDataset out = ds;
  out.train_mask.assign(ds.rows(), 0);
  for (std::size_t i = 0; i < n_train; ++i) out.train_mask[order[i]] = 1;
  return out;
}

AlignedDataset synth_blobs(const BlobSpec& spec) {
  if (spec.dim < 2) throw std::invalid_argument("synth_blobs: dim must be >= 2");
  if (!(spec.separation > 0.0)) throw std::invalid_argument("synth_blobs: separation must be > 0");
  if (spec.classes < 2) throw std::invalid_argument("synth_blobs: need >= 2 classes");
  if (spec.n_per_class == 0) throw std::invalid_argument("synth_blobs: n_per_class must be > 0");

  Rng rng(spec.seed);
  std::vector<std::vector<double>> means;
  double box = spec.separation;
  int rejections = 0;
  while (means.size() < spec.classes) {
    std::vector<double> candidate(spec.dim);
    for (auto& v : candidate) v = rng.uniform(-box, box);
    bool ok = true;
    for (const auto& m : means) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < spec.dim; ++k) d2 += (m[k] - candidate[k]) * (m[k] - candidate[k]);
      if (std::sqrt(d2) < spec.separation) {
        ok = false;
        break;
      }
    }
    if (ok) {
      means.push_back(std::move(candidate));
    } else if (++rejections % 1000 == 0) {
      box *= 1.1;
    }
  }

  AlignedDataset ds;
  ds.num_classes = spec.classes;
  ds.features = Matrix(spec.classes * spec.n_per_class, spec.dim);
  std::size_t r = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t i = 0; i < spec.n_per_class; ++i, ++r) {
      auto row = ds.features.row(r);
      for (std::size_t k = 0; k < spec.dim; ++k) row[k] = spec.offset + means[c][k] + rng.normal();
      ds.labels.push_back(static_cast<int>(c));
      ds.ids.push_back(std::to_string(r));
    }
  }
  ds.train_mask.assign(ds.rows(), 1);
  return ds;
}

namespace {

constexpr std::size_t kStrokeCount = 8;

// All 3-of-8 stroke subsets in lexicographic order.
std::vector<std::array<std::size_t, 3>> stroke_triples() {
  std::vector<std::array<std::size_t, 3>> out;
  for (std::size_t a = 0; a < kStrokeCount; ++a) {
    for (std::size_t b = a + 1; b < kStrokeCount; ++b) {
      for (std::size_t c = b + 1; c < kStrokeCount; ++c) out.push_back({a, b, c});
    }
  }
  return out;
}

void draw_stroke(std::vector<double>& img, std::size_t side, std::size_t stroke) {
  const std::size_t q1 = side / 4;
  const std::size_t q3 = (3 * side) / 4;
  const std::size_t mid = side / 2;
  auto set = [&](std::size_t r, std::size_t c) { img[r * side + c] = 1.0; };
  for (std::size_t i = 0; i < side; ++i) {
    switch (stroke) {
      case 0: set(q1, i); break;
      case 1: set(q3, i); break;
      case 2: set(i, q1); break;
      case 3: set(i, q3); break;
      case 4: set(i, i); break;
      case 5: set(i, side - 1 - i); break;
      case 6: set(mid, i); break;
      case 7: set(i, mid - 1); break;
      default: break;
    }
  }
}

}  // namespace

std::vector<double> glyph_template(std::size_t cls, std::size_t side) {
  static const auto triples = stroke_triples();
  if (cls >= triples.size()) {
    throw std::invalid_argument("glyph_template: at most " + std::to_string(triples.size()) +
                                " classes supported");
  }
  // 17 is coprime with 56, so the walk visits distinct triples.
  const auto& strokes = triples[(cls * 17) % triples.size()];
  std::vector<double> img(side * side, 0.0);
  for (auto s : strokes) draw_stroke(img, side, s);
  return img;
}

AlignedDataset synth_images(const ImageSpec& spec) {
  if (spec.side < 8) throw std::invalid_argument("synth_images: side must be >= 8");
  if (spec.classes < 2) throw std::invalid_argument("synth_images: need >= 2 classes");
  if (spec.n_per_class == 0) throw std::invalid_argument("synth_images: n_per_class must be > 0");
  if (spec.noise < 0.0) throw std::invalid_argument("synth_images: negative noise");
  Rng rng(spec.seed);
  const std::size_t pixels = spec.side * spec.side;
  AlignedDataset ds;
  ds.num_classes = spec.classes;
  ds.image_side = spec.side;
  ds.features = Matrix(spec.classes * spec.n_per_class, pixels);
  std::size_t r = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const auto glyph = glyph_template(c, spec.side);
    for (std::size_t i = 0; i < spec.n_per_class; ++i, ++r) {
      auto row = ds.features.row(r);
      for (std::size_t p = 0; p < pixels; ++p) {
        const double v = glyph[p] + (spec.noise > 0.0 ? spec.noise * rng.normal() : 0.0);
        row[p] = std::clamp(v, 0.0, 1.0);
      }
      ds.labels.push_back(static_cast<int>(c));
      ds.ids.push_back(std::to_string(r));
    }
  }
  ds.train_mask.assign(ds.rows(), 1);
  return ds;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

AlignedDataset parse_csv(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header row");
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::optional<std::size_t> label_col, id_col;
  std::vector<std::size_t> feature_cols;
  const std::set<std::string> drop(options.drop_columns.begin(), options.drop_columns.end());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) {
      label_col = c;
    } else if (header[c] == "id") {
      id_col = c;
    } else if (!drop.count(header[c])) {
      feature_cols.push_back(c);
    }
  }
  if (!label_col) throw std::invalid_argument("csv: label column '" + options.label_column + "' missing");
  if (feature_cols.empty()) throw std::invalid_argument("csv: no feature columns left");

  std::vector<double> values;
  std::vector<std::string> raw_labels, ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " cells, got " +
                                  std::to_string(cells.size()));
    }
    for (auto c : feature_cols) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw std::invalid_argument("csv line " + std::to_string(line_no) + ", column '" +
                                    header[c] + "': non-numeric cell '" + cells[c] + "'");
      }
      values.push_back(*v);
    }
    const std::string label = trim(cells[*label_col]);
    if (label.empty()) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": missing label");
    }
    raw_labels.push_back(label);
    ids.push_back(id_col ? trim(cells[*id_col]) : std::to_string(ids.size()));
  }
  if (raw_labels.empty()) throw std::invalid_argument("csv: no data rows");

  // Numeric labels sort numerically, anything else lexicographically.
  std::vector<std::string> distinct(raw_labels.begin(), raw_labels.end());
  std::sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
    const auto na = parse_number(a);
    const auto nb = parse_number(b);
    if (na && nb) return *na < *nb;
    return a < b;
  });
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<std::string, int> label_index;
  for (std::size_t i = 0; i < distinct.size(); ++i) label_index[distinct[i]] = static_cast<int>(i);

  AlignedDataset ds;
  ds.features = Matrix(raw_labels.size(), feature_cols.size(), std::move(values));
  for (const auto& l : raw_labels) ds.labels.push_back(label_index.at(l));
  ds.num_classes = distinct.size();
  ds.ids = std::move(ids);
  ds.train_mask.assign(ds.rows(), 1);
  if (ds.rows() >= 2) ds = train_test_split(ds, options.train_ratio, options.seed);

  if (!options.standardize) return ds;
  const auto train = ds.train_rows();
  const double n = static_cast<double>(train.size());
  for (std::size_t c = 0; c < ds.features.cols(); ++c) {
    double mean = 0.0;
    for (auto r : train) mean += ds.features(r, c);
    mean /= n;
    double var = 0.0;
    for (auto r : train) var += (ds.features(r, c) - mean) * (ds.features(r, c) - mean);
    var /= n;
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (std::size_t r = 0; r < ds.rows(); ++r) ds.features(r, c) = (ds.features(r, c) - mean) * scale;
  }
  return ds;
}

AlignedDataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options);
}

}  // namespace binvfl
