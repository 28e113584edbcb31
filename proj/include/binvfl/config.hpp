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
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace binvfl {

// Validation failure; what() starts with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct DatasetConfig {
  std::string kind = "blobs";  // blobs | images | csv
  std::size_t classes = 2;
  std::size_t n_per_class = 200;
  std::size_t dim = 8;         // blobs
  double separation = 4.0;     // blobs
  double offset = 0.0;         // blobs
  std::size_t side = 12;       // images
  double noise = 0.1;          // images
  std::string path;            // csv
  std::string label_column = "label";
  std::vector<std::string> drop_columns;
};

struct OptimizerConfig {
  double lr = 1e-3;
  double weight_decay = 5e-4;
  int decay_every = 10;
  double decay_factor = 0.9;
};

struct AttackConfig {
  std::size_t party = 0;
  // reconstruction
  double lambda = 1e-2;
  int steps = 3000;
  double lr = 0.05;
  // pgd
  double omega = 1.0;
  double eta = 0.1;
  int pgd_steps = 5;
  int target_class = 0;
  std::size_t samples = 100;
  // label-inference probe
  std::size_t probe_hidden = 32;
  int probe_epochs = 50;
};

struct DefenseConfig {
  std::vector<double> epsilons = {1.0, 2.0, 10.0};
  int runs = 3;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  std::size_t parties = 2;
  std::vector<double> feature_ratios;  // empty: equal shares
  std::size_t code_length = 0;         // 0: ceil(log2(classes))
  std::vector<std::size_t> bottom_hidden = {32};
  std::size_t top_hidden = 64;
  int epochs = 30;
  std::size_t batch_size = 256;
  OptimizerConfig optimizer;
  double train_ratio = 0.7;
  bool oversample = false;
  bool use_bn = true;
  bool use_consistency = true;
  bool train_bn_affine = true;
  AttackConfig attack;
  DefenseConfig defense;

  std::vector<double> ratios() const;
  // code_length, or the minimum for `classes` when unset.
  std::size_t effective_code_length(std::size_t classes) const;
  void validate() const;
};

// Unknown keys are rejected. Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// 16 hex digits of FNV-1a 64 over the canonical JSON dump.
std::string config_hash(const ExperimentConfig& config);

}  // namespace binvfl
