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

#include <cstdint>
#include <span>
#include <vector>

#include "binvfl/tensor.hpp"

namespace binvfl {

// Per-dimension batch normalization ahead of the sign layer. Normalizing
// every batch to zero mean per dimension is what keeps each code bit split
// between +1 and -1.
struct BatchNormState {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
  double momentum = 0.1;
  // Number of training batches folded into the running statistics.
  std::uint64_t batches_seen = 0;
  // When false, gamma/beta stay at their current values during training.
  bool affine_trainable = true;

  static BatchNormState identity(std::size_t dim);
  std::size_t dim() const { return gamma.size(); }

  std::vector<std::span<double>> parameters();

  void validate() const;
};

struct BatchNormCache {
  Matrix normalized;            // (x - mu_B) / sqrt(var_B + eps)
  std::vector<double> inv_std;  // 1 / sqrt(var_B + eps)
  std::vector<double> gamma;
};

struct BnTrainResult {
  Matrix output;
  BatchNormCache cache;
};

// Training-mode transform with batch statistics. Updates the running mean
// and running variance (unbiased, m/(m-1)) by exponential moving average.
BnTrainResult bn_forward_train(const Matrix& x, BatchNormState& state);

// Inference-mode transform with the running statistics; does not mutate.
Matrix bn_forward_infer(const Matrix& x, const BatchNormState& state);

struct BnGrads {
  Matrix grad_input;
  std::vector<double> grad_gamma;
  std::vector<double> grad_beta;
};

BnGrads bn_backward(const Matrix& grad_out, const BatchNormCache& cache);

// Input gradient of the inference transform (a per-dimension scale).
Matrix bn_infer_backward(const Matrix& grad_out, const BatchNormState& state);

}  // namespace binvfl
