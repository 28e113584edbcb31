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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "binvfl/adam.hpp"
#include "binvfl/batch_norm.hpp"
#include "binvfl/codebook.hpp"
#include "binvfl/dataset.hpp"
#include "binvfl/dense.hpp"
#include "binvfl/tensor.hpp"

namespace binvfl {

enum class Mode { kTrain, kInfer };

// One data holder: bottom model -> BN -> sign. Only its own feature columns
// are ever handed to it.
struct PartyState {
  std::size_t id = 0;
  DenseNet bottom;
  BatchNormState bn;
  std::vector<std::size_t> feature_columns;
  AdamState optimizer;
  bool use_bn = true;

  std::size_t code_length() const { return bottom.output_dim(); }
  bool trains_affine() const { return use_bn && bn.affine_trainable; }

  // Bottom weights/biases, then gamma and beta when they are trainable.
  std::vector<std::span<double>> parameters();

  void validate() const;
};

struct PartyOutput {
  Matrix embedding;   // bottom-model output
  Matrix normalized;  // BN output (equals embedding when BN is disabled)
  Matrix codes;       // sign(normalized)
  ForwardCache bottom_cache;
  std::optional<BatchNormCache> bn_cache;
};

// Training mode folds the batch into the BN running statistics and needs at
// least two rows.
PartyOutput party_forward(PartyState& party, const Matrix& local_features, Mode mode);

// Inference-mode encoding; leaves the party untouched.
PartyOutput party_encode(const PartyState& party, const Matrix& local_features);

struct PartyGrads {
  Matrix grad_normalized;  // after the straight-through pass
  DenseGrads bottom;
  std::vector<double> grad_gamma;
  std::vector<double> grad_beta;

  std::vector<std::span<const double>> views(const PartyState& party) const;
};

PartyGrads party_gradients(const PartyState& party, const PartyOutput& out,
                           const Matrix& grad_codes);
void apply_party_update(PartyState& party, const PartyGrads& grads);

struct ServerState {
  DenseNet top;
  AdamState optimizer;
  Codebook codebook;
  std::size_t num_parties = 0;
  std::size_t code_length = 0;
  bool trained = false;

  std::size_t classes() const { return top.output_dim(); }
  void validate() const;
};

// Horizontal concatenation in party order.
Matrix server_aggregate(std::span<const Matrix> codes);

// Splits the concatenated codes back into per-party blocks.
std::vector<Matrix> split_code_blocks(const Matrix& codes, std::size_t parties,
                                      std::size_t code_length);

// Server-side sign applied to whatever the parties submitted.
Matrix rebinarize_guard(const Matrix& submitted);

struct LossResult {
  double total = 0.0;
  double ce = 0.0;
  double cos_term = 0.0;
  Matrix logits;
  Matrix grad_codes;  // dL/dH, width parties * code_length
  DenseGrads top_grads;
};

// CE(top(H), y) + (1 - cos) where the cosine term is taken per party block
// against the class code and averaged over parties and batch. The cosine
// gradient reaches only each party's own block; CE flows through the top.
LossResult compute_loss(const ServerState& server, const Matrix& codes,
                        std::span<const int> labels, bool use_consistency = true);

struct VflSystem {
  std::vector<PartyState> parties;
  ServerState server;
};

struct SystemSpec {
  std::size_t classes = 2;
  std::size_t code_length = 1;
  FeaturePartition partition;
  std::vector<std::size_t> bottom_hidden = {32};
  std::size_t top_hidden = 64;
  bool use_bn = true;
  bool affine_trainable = true;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::uint64_t codebook_seed = 0;
};

VflSystem make_system(const SystemSpec& spec);

struct TrainConfig {
  int epochs = 30;
  std::size_t batch_size = 256;
  int decay_every = 10;
  double decay_factor = 0.9;
  bool use_consistency = true;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  std::string split;
  double accuracy = 0.0;
  double ce = 0.0;
  double cos_term = 0.0;
  double lr = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> records;

  // Accuracy per epoch for one split, in epoch order.
  std::vector<double> accuracies(const std::string& split) const;
  void write_csv(std::ostream& out) const;
};

TrainingLog train(VflSystem& system, const AlignedDataset& ds, const TrainConfig& config);

struct Evaluation {
  double accuracy = 0.0;
  double ce = 0.0;
  double cos_term = 0.0;
};

Evaluation evaluate(const VflSystem& system, const Matrix& features, std::span<const int> labels,
                    bool use_consistency = true);

// Per-party inference codes for samples given in the global feature space;
// each party reads only its own columns.
std::vector<Matrix> encode_all(const VflSystem& system, const Matrix& features);

std::vector<int> predict(const VflSystem& system, const Matrix& features);
std::vector<int> predict_from_codes(const ServerState& server, const Matrix& submitted);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

}  // namespace binvfl
