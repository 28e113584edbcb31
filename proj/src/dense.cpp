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

#include "binvfl/dense.hpp"

#include <cmath>
#include <string>

namespace binvfl {

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.bias.size() != layer.fan_out()) {
      throw DimensionError("layer " + std::to_string(i) + ": bias length mismatch");
    }
    if (i > 0 && layers_[i - 1].fan_out() != layer.fan_in()) {
      throw DimensionError("layer " + std::to_string(i) + ": does not chain with previous");
    }
    if (!all_finite(layer.weight)) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": non-finite weight");
    }
  }
}

DenseNet DenseNet::init(std::span<const std::size_t> widths, Rng& rng,
                        Activation hidden, Activation output) {
  if (widths.size() < 2) throw std::invalid_argument("DenseNet::init needs >= 2 widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t fan_in = widths[i];
    const std::size_t fan_out = widths[i + 1];
    if (fan_in == 0 || fan_out == 0) throw std::invalid_argument("zero layer width");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer;
    layer.weight = Matrix(fan_in, fan_out);
    for (auto& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    layer.bias.resize(fan_out);
    for (auto& b : layer.bias) b = rng.uniform(-bound, bound);
    layer.activation = (i + 2 == widths.size()) ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

std::size_t DenseNet::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().fan_in();
}

std::size_t DenseNet::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().fan_out();
}

std::vector<std::span<double>> DenseNet::parameters() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    out.emplace_back(layer.weight.data());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> DenseNet::parameters() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers_) {
    out.emplace_back(layer.weight.data());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> DenseGrads::views() const {
  std::vector<std::span<const double>> out;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.emplace_back(weight[i].data());
    out.emplace_back(bias[i]);
  }
  return out;
}

namespace {

Matrix affine(const DenseLayer& layer, const Matrix& x) {
  Matrix z = matmul(x, layer.weight);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < z.cols(); ++c) row[c] += layer.bias[c];
  }
  return z;
}

void activate(Matrix& z, Activation act) {
  if (act == Activation::kRelu) {
    for (auto& v : z.data()) v = v > 0.0 ? v : 0.0;
  }
}

void check_input(const DenseNet& net, const Matrix& x) {
  if (net.depth() == 0) throw std::invalid_argument("forward on empty network");
  if (x.cols() != net.input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                         " columns, network expects " + std::to_string(net.input_dim()));
  }
}

}  // namespace

ForwardResult forward(const DenseNet& net, const Matrix& x) {
  check_input(net, x);
  ForwardResult result;
  Matrix current = x;
  for (const auto& layer : net.layers()) {
    Matrix z = affine(layer, current);
    result.cache.inputs.push_back(std::move(current));
    result.cache.pre_activations.push_back(z);
    activate(z, layer.activation);
    current = std::move(z);
  }
  result.output = std::move(current);
  return result;
}

Matrix forward_output(const DenseNet& net, const Matrix& x) {
  check_input(net, x);
  Matrix current = x;
  for (const auto& layer : net.layers()) {
    Matrix z = affine(layer, current);
    activate(z, layer.activation);
    current = std::move(z);
  }
  return current;
}

BackwardResult backward(const DenseNet& net, const ForwardCache& cache, const Matrix& grad_out) {
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size() || cache.pre_activations.size() != layers.size()) {
    throw DimensionError("backward: cache does not match network depth");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (cache.inputs[i].cols() != layers[i].fan_in() ||
        cache.pre_activations[i].cols() != layers[i].fan_out()) {
      throw DimensionError("backward: stale cache at layer " + std::to_string(i));
    }
  }
  require_same_shape(grad_out, cache.pre_activations.back(), "backward grad_out");

  BackwardResult result;
  result.grads.weight.resize(layers.size());
  result.grads.bias.resize(layers.size());

  Matrix grad = grad_out;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& layer = layers[i];
    if (layer.activation == Activation::kRelu) {
      const auto z = cache.pre_activations[i].data();
      auto g = grad.data();
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (z[k] <= 0.0) g[k] = 0.0;
      }
    }
    result.grads.weight[i] = matmul_tn(cache.inputs[i], grad);
    result.grads.bias[i] = column_sums(grad);
    grad = matmul_nt(grad, layer.weight);
  }
  result.grad_input = std::move(grad);
  return result;
}

}  // namespace binvfl
