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

#include "binvfl/hash_layer.hpp"

#include <algorithm>

namespace binvfl {

Matrix sign_forward(const Matrix& v) {
  Matrix out(v.rows(), v.cols());
  std::transform(v.data().begin(), v.data().end(), out.data().begin(), sign_value);
  return out;
}

Matrix ste_backward(const Matrix& grad_out) { return grad_out; }

bool is_binary_code(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(),
                     [](double v) { return v == 1.0 || v == -1.0; });
}

}  // namespace binvfl
