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

#include "binvfl/tensor.hpp"

namespace binvfl {

// KL(P_real || Q_recon) between value histograms over the common range of
// both arrays. Counts are add-one smoothed, so the result is finite.
double kld_hist(std::span<const double> real, std::span<const double> recon, std::size_t bins = 10);

// Global (single-window) SSIM for unit dynamic range, C1 = 0.01^2 and
// C2 = 0.03^2. Returns the raw value in [-1, 1].
double ssim(std::span<const double> x, std::span<const double> y);

// ssim() clamped to [0, 1] for reporting.
double ssim_report(std::span<const double> x, std::span<const double> y);

// Distance correlation between paired samples (rows). Zero when either side
// has no spread.
double dcor(const Matrix& x, const Matrix& y);

// Treats each entry as one scalar observation.
double dcor(std::span<const double> x, std::span<const double> y);

}  // namespace binvfl
