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

#include "binvfl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace binvfl {

Matrix softmax(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto p = probs.row(r);
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      p[c] = std::exp(z[c] - peak);
      total += p[c];
    }
    for (auto& v : p) v /= total;
  }
  return probs;
}

LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(logits.rows()) + " rows");
  }
  const auto classes = static_cast<int>(logits.cols());
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw std::out_of_range("label " + std::to_string(y) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
  }
  LossAndGrad out;
  if (logits.rows() == 0) {
    out.grad = Matrix(0, logits.cols());
    return out;
  }
  const double batch = static_cast<double>(logits.rows());
  out.grad = Matrix(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - peak);
    const double log_norm = peak + std::log(sum);
    total += log_norm - z[labels[r]];
    auto g = out.grad.row(r);
    for (std::size_t c = 0; c < z.size(); ++c) g[c] = std::exp(z[c] - log_norm) / batch;
    g[labels[r]] -= 1.0 / batch;
  }
  out.loss = total / batch;
  return out;
}

LossAndGrad cosine_loss(const Matrix& h, const Matrix& targets) {
  require_same_shape(h, targets, "cosine_loss");
  LossAndGrad out;
  out.grad = Matrix(h.rows(), h.cols());
  if (h.rows() == 0) return out;
  const double batch = static_cast<double>(h.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < h.rows(); ++r) {
    auto a = h.row(r);
    auto t = targets.row(r);
    double dot = 0.0, aa = 0.0, tt = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      dot += a[c] * t[c];
      aa += a[c] * a[c];
      tt += t[c] * t[c];
    }
    if (aa == 0.0 || tt == 0.0) {
      throw std::invalid_argument("cosine_loss: zero-norm row " + std::to_string(r));
    }
    const double na = std::sqrt(aa);
    const double nt = std::sqrt(tt);
    const double cos = std::clamp(dot / (na * nt), -1.0, 1.0);
    total += 1.0 - cos;
    // d(1 - cos)/da = -(t / (|a||t|) - cos * a / |a|^2)
    auto g = out.grad.row(r);
    for (std::size_t c = 0; c < a.size(); ++c) {
      g[c] = -(t[c] / (na * nt) - cos * a[c] / aa) / batch;
    }
  }
  out.loss = total / batch;
  return out;
}

}  // namespace binvfl
