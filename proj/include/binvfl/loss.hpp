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

#include <span>

#include "binvfl/tensor.hpp"

namespace binvfl {

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

// Mean cross-entropy of softmax(logits) against integer labels.
// grad = (softmax - onehot) / batch.
LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

Matrix softmax(const Matrix& logits);

// Mean over rows of (1 - cos(h_row, target_row)); each row term lies in [0, 2].
LossAndGrad cosine_loss(const Matrix& h, const Matrix& targets);

}  // namespace binvfl
