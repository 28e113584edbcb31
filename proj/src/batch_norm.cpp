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

#include "binvfl/batch_norm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace binvfl {

BatchNormState BatchNormState::identity(std::size_t dim) {
  BatchNormState s;
  s.gamma.assign(dim, 1.0);
  s.beta.assign(dim, 0.0);
  s.running_mean.assign(dim, 0.0);
  s.running_var.assign(dim, 1.0);
  return s;
}

std::vector<std::span<double>> BatchNormState::parameters() {
  return {std::span<double>(gamma), std::span<double>(beta)};
}

void BatchNormState::validate() const {
  const std::size_t d = gamma.size();
  if (beta.size() != d || running_mean.size() != d || running_var.size() != d) {
    throw DimensionError("BatchNormState: per-dimension vectors differ in length");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("BatchNormState: eps must be positive");
  if (!(momentum > 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("BatchNormState: momentum must lie in (0, 1]");
  }
  for (double v : running_var) {
    if (v < 0.0) throw std::invalid_argument("BatchNormState: negative running variance");
  }
}

BnTrainResult bn_forward_train(const Matrix& x, BatchNormState& state) {
  state.validate();
  if (x.cols() != state.dim()) {
    throw DimensionError("bn_forward_train: " + std::to_string(x.cols()) +
                         " columns for BN of dimension " + std::to_string(state.dim()));
  }
  const std::size_t m = x.rows();
  if (m < 2) throw std::invalid_argument("bn_forward_train: batch of size < 2");

  const std::size_t d = state.dim();
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<double> mean = column_sums(x);
  for (auto& v : mean) v *= inv_m;
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = row[c] - mean[c];
      var[c] += diff * diff;
    }
  }
  for (auto& v : var) v *= inv_m;

  BnTrainResult result;
  result.cache.inv_std.resize(d);
  for (std::size_t c = 0; c < d; ++c) result.cache.inv_std[c] = 1.0 / std::sqrt(var[c] + state.eps);
  result.cache.gamma = state.gamma;
  result.cache.normalized = Matrix(m, d);
  result.output = Matrix(m, d);
  for (std::size_t r = 0; r < m; ++r) {
    auto src = x.row(r);
    auto norm = result.cache.normalized.row(r);
    auto out = result.output.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      norm[c] = (src[c] - mean[c]) * result.cache.inv_std[c];
      out[c] = state.gamma[c] * norm[c] + state.beta[c];
    }
  }

  const double bessel = static_cast<double>(m) / static_cast<double>(m - 1);
  for (std::size_t c = 0; c < d; ++c) {
    state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
    state.running_var[c] =
        (1.0 - state.momentum) * state.running_var[c] + state.momentum * var[c] * bessel;
  }
  state.batches_seen += 1;
  return result;
}

Matrix bn_forward_infer(const Matrix& x, const BatchNormState& state) {
  state.validate();
  if (state.batches_seen == 0) {
    throw std::logic_error("bn_forward_infer: running statistics were never trained");
  }
  if (x.cols() != state.dim()) {
    throw DimensionError("bn_forward_infer: " + std::to_string(x.cols()) +
                         " columns for BN of dimension " + std::to_string(state.dim()));
  }
  const std::size_t d = state.dim();
  std::vector<double> scale(d), shift(d);
  for (std::size_t c = 0; c < d; ++c) {
    scale[c] = state.gamma[c] / std::sqrt(state.running_var[c] + state.eps);
    shift[c] = state.beta[c] - scale[c] * state.running_mean[c];
  }
  Matrix out(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < d; ++c) dst[c] = scale[c] * src[c] + shift[c];
  }
  return out;
}

BnGrads bn_backward(const Matrix& grad_out, const BatchNormCache& cache) {
  require_same_shape(grad_out, cache.normalized, "bn_backward");
  const std::size_t m = grad_out.rows();
  const std::size_t d = grad_out.cols();
  if (cache.inv_std.size() != d || cache.gamma.size() != d) {
    throw DimensionError("bn_backward: cache dimension mismatch");
  }
  BnGrads g;
  g.grad_gamma.assign(d, 0.0);
  g.grad_beta.assign(d, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    auto go = grad_out.row(r);
    auto xn = cache.normalized.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      g.grad_beta[c] += go[c];
      g.grad_gamma[c] += go[c] * xn[c];
    }
  }
  // dx = inv_std / m * (m * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)),
  // with dxhat = gamma * grad_out; both sums reduce to the gamma/beta grads.
  const double md = static_cast<double>(m);
  g.grad_input = Matrix(m, d);
  for (std::size_t r = 0; r < m; ++r) {
    auto go = grad_out.row(r);
    auto xn = cache.normalized.row(r);
    auto gi = g.grad_input.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      gi[c] = cache.gamma[c] * cache.inv_std[c] / md *
              (md * go[c] - g.grad_beta[c] - xn[c] * g.grad_gamma[c]);
    }
  }
  return g;
}

Matrix bn_infer_backward(const Matrix& grad_out, const BatchNormState& state) {
  if (grad_out.cols() != state.dim()) throw DimensionError("bn_infer_backward: dimension mismatch");
  Matrix out(grad_out.rows(), grad_out.cols());
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    auto src = grad_out.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) {
      dst[c] = src[c] * state.gamma[c] / std::sqrt(state.running_var[c] + state.eps);
    }
  }
  return out;
}

}  // namespace binvfl
