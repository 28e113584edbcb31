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
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "binvfl/adam.hpp"
#include "binvfl/dataset.hpp"
#include "binvfl/protocol.hpp"
#include "binvfl/tensor.hpp"

namespace binvfl {

struct AttackTarget {
  int label = -1;
  std::vector<double> input;   // e.g. reconstructed pixels or perturbed code
  std::vector<double> output;  // e.g. reference image or rebinarized code
  std::map<std::string, double> metrics;
};

// Result of one attack run. Metric ranges: kld >= 0; ssim, dcor, rates and
// accuracies in [0, 1].
struct AttackReport {
  std::string kind;
  std::map<std::string, double> metrics;
  std::vector<AttackTarget> targets;
  std::vector<std::vector<double>> traces;

  void check_ranges() const;
};

// ---- reconstruction -------------------------------------------------------

// Sum over pixels of sqrt(dv^2 + dh^2), dv/dh the differences to the pixel
// below / to the right; a missing neighbour contributes 0.
double total_variation(std::span<const double> image, std::size_t rows, std::size_t cols);

// Subgradient of total_variation, smoothed by `smoothing` inside the root.
std::vector<double> total_variation_grad(std::span<const double> image, std::size_t rows,
                                         std::size_t cols, double smoothing = 1e-8);

struct ReconstructionConfig {
  double lambda = 1e-2;
  int steps = 3000;
  double lr = 0.05;
  std::uint64_t seed = 0;
  // Halve the step until the objective does not increase.
  bool step_halving = true;
  // Project every iterate onto [0, 1].
  bool clamp_unit = true;
  double init_low = 0.0;
  double init_high = 1.0;
  // Image layout of the party's input for the TV term; rows = 0 means one row.
  std::size_t image_rows = 0;
};

struct ReconstructionResult {
  std::vector<double> input;
  std::vector<double> objective_trace;  // objective at each accepted iterate
};

// argmin_x MSE(BN(f(x)), target) + lambda * TV(x) by gradient descent from a
// seeded uniform start. The pre-sign BN output is the regression target
// because sign() has zero gradient.
ReconstructionResult reconstruct_from_code(const PartyState& party,
                                           std::span<const double> target_code,
                                           const ReconstructionConfig& config);

// Reconstructs one input per class from its codebook code and scores it
// against that class's mean input (party's columns only): SSIM, KLD, DCOR.
AttackReport reconstruction_study(const VflSystem& system, const AlignedDataset& ds,
                                  std::size_t party, const ReconstructionConfig& config);

// ---- PGD on submitted codes ----------------------------------------------

struct PgdConfig {
  double omega = 1.0;  // perturbation clipped to [-omega, omega]
  double eta = 0.1;    // step size
  int steps = 5;
  std::size_t adversary = 0;
  int target_class = 0;
};

struct PgdOutcome {
  bool success = false;
  int prediction = -1;
  std::vector<double> original_code;
  std::vector<double> perturbed_code;
  double max_abs_perturbation = 0.0;
};

// The adversary starts from its honest code x0 and iterates
//   x <- x - eta * sign(grad CE(top(H(x)), target));  x <- x0 + clip(x - x0, omega)
// using gradients of the top model on the raw submitted values. Success
// means the server, after rebinarizing, predicts the target class.
PgdOutcome pgd_attack(const VflSystem& system, std::span<const double> sample,
                      const PgdConfig& config);

struct PgdStudyConfig {
  PgdConfig attack;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
};

// Runs pgd_attack on `samples` test rows whose label differs from the target
// and which the clean system does not already assign to it.
AttackReport pgd_study(const VflSystem& system, const AlignedDataset& ds,
                       const PgdStudyConfig& config);

// ---- passive label inference ---------------------------------------------

struct ProbeConfig {
  std::size_t hidden = 32;  // 0 gives a linear probe
  int epochs = 50;
  std::size_t batch_size = 32;
  double train_ratio = 0.7;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 0.0};
};

// Trains a fresh probe on a seeded split of (representations, labels) and
// returns held-out accuracy.
double passive_label_inference(const Matrix& representations, std::span<const int> labels,
                               const ProbeConfig& config, std::uint64_t seed);

// Probe accuracy on one party's continuous BN outputs versus its codes.
AttackReport label_inference_study(const VflSystem& system, const AlignedDataset& ds,
                                   std::size_t party, const ProbeConfig& config,
                                   std::uint64_t seed);

}  // namespace binvfl
