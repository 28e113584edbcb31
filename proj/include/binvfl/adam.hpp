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

namespace binvfl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 penalty folded into the gradient (coupled, not AdamW).
  double weight_decay = 5e-4;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam(std::span<const std::span<double>> params, const AdamConfig& config);

// One Adam update at state.config.lr. Shapes of params, grads and moments
// must agree block by block.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

// base_lr * factor^floor(epoch / every); defaults shrink by 10% every 10 epochs.
double lr_schedule(int epoch, double base_lr, int every = 10, double factor = 0.9);

}  // namespace binvfl
