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

#include "binvfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace binvfl {

double kld_hist(std::span<const double> real, std::span<const double> recon, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("kld_hist: need at least 2 bins");
  if (real.empty() || recon.empty()) throw std::invalid_argument("kld_hist: empty input");
  double lo = std::min(*std::min_element(real.begin(), real.end()),
                       *std::min_element(recon.begin(), recon.end()));
  double hi = std::max(*std::max_element(real.begin(), real.end()),
                       *std::max_element(recon.begin(), recon.end()));
  if (hi <= lo) hi = lo + 1.0;
  auto histogram = [&](std::span<const double> values) {
    std::vector<double> counts(bins, 1.0);
    for (double v : values) {
      auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      counts[std::min(b, bins - 1)] += 1.0;
    }
    const double total = static_cast<double>(values.size() + bins);
    for (auto& c : counts) c /= total;
    return counts;
  };
  const auto p = histogram(real);
  const auto q = histogram(recon);
  double kl = 0.0;
  for (std::size_t b = 0; b < bins; ++b) kl += p[b] * std::log(p[b] / q[b]);
  return std::max(kl, 0.0);
}

double ssim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("ssim: shape mismatch");
  if (x.empty()) throw std::invalid_argument("ssim: empty input");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cxy += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

double ssim_report(std::span<const double> x, std::span<const double> y) {
  return std::clamp(ssim(x, y), 0.0, 1.0);
}

namespace {

// Double-centred pairwise Euclidean distance matrix, n x n row-major.
std::vector<double> centred_distances(const Matrix& m) {
  const std::size_t n = m.rows();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      auto ri = m.row(i);
      auto rj = m.row(j);
      for (std::size_t k = 0; k < m.cols(); ++k) d2 += (ri[k] - rj[k]) * (ri[k] - rj[k]);
      a[i * n + j] = a[j * n + i] = std::sqrt(d2);
    }
  }
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_mean[i] += a[i * n + j];
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] += grand - row_mean[i] - row_mean[j];
  }
  return a;
}

}  // namespace

double dcor(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw DimensionError("dcor: row counts differ");
  if (x.rows() < 2) throw std::invalid_argument("dcor: need at least 2 rows");
  const auto a = centred_distances(x);
  const auto b = centred_distances(y);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  const double r2 = ab / std::sqrt(aa * bb);
  return std::sqrt(std::clamp(r2, 0.0, 1.0));
}

double dcor(std::span<const double> x, std::span<const double> y) {
  return dcor(Matrix(x.size(), 1, std::vector<double>(x.begin(), x.end())),
              Matrix(y.size(), 1, std::vector<double>(y.begin(), y.end())));
}

}  // namespace binvfl
