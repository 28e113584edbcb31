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

#include "binvfl/tensor.hpp"

namespace binvfl {

// +1 for v >= 0, -1 otherwise. Zero maps to +1.
inline double sign_value(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// Elementwise binarization into {-1, +1}.
Matrix sign_forward(const Matrix& v);

// Straight-through estimator: the gradient w.r.t. the pre-sign values is
// taken to be the gradient w.r.t. the codes, unchanged.
Matrix ste_backward(const Matrix& grad_out);

bool is_binary_code(const Matrix& m);

}  // namespace binvfl
