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
#include <span>
#include <vector>

#include "binvfl/random.hpp"
#include "binvfl/tensor.hpp"

namespace binvfl {

enum class Activation { kIdentity, kRelu };

// y = act(x * weight + bias); weight is fan_in x fan_out.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t fan_in() const { return weight.rows(); }
  std::size_t fan_out() const { return weight.cols(); }
};

class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  // widths = {in, hidden..., out}. Hidden layers use `hidden`, the last layer
  // uses `output`. Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static DenseNet init(std::span<const std::size_t> widths, Rng& rng,
                       Activation hidden = Activation::kRelu,
                       Activation output = Activation::kIdentity);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t depth() const { return layers_.size(); }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  // Flat views over weight/bias storage, in layer order (w0, b0, w1, b1, ...).
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

 private:
  std::vector<DenseLayer> layers_;
};

struct ForwardCache {
  std::vector<Matrix> inputs;           // input to each layer
  std::vector<Matrix> pre_activations;  // x*W+b for each layer
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

struct DenseGrads {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;

  // Same ordering as DenseNet::parameters().
  std::vector<std::span<const double>> views() const;
};

struct BackwardResult {
  Matrix grad_input;
  DenseGrads grads;
};

ForwardResult forward(const DenseNet& net, const Matrix& x);
Matrix forward_output(const DenseNet& net, const Matrix& x);
BackwardResult backward(const DenseNet& net, const ForwardCache& cache, const Matrix& grad_out);

}  // namespace binvfl
