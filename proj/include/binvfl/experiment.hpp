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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "binvfl/attacks.hpp"
#include "binvfl/checkpoint.hpp"
#include "binvfl/config.hpp"
#include "binvfl/dataset.hpp"
#include "binvfl/protocol.hpp"
#include "json.hpp"

namespace binvfl {

// Generates or loads the data, assigns the vertical partition, splits and
// (optionally) oversamples. Deterministic in config.seed.
AlignedDataset build_dataset(const ExperimentConfig& config);

SystemSpec system_spec(const ExperimentConfig& config, const AlignedDataset& ds);
TrainConfig train_config(const ExperimentConfig& config);

// out_root / <config hash>
std::filesystem::path run_directory(const std::filesystem::path& out_root,
                                    const ExperimentConfig& config);

struct RunArtifacts {
  std::filesystem::path directory;
  Checkpoint checkpoint;
  AlignedDataset dataset;
};

// Trains from scratch and writes checkpoint.json, train_log.csv and
// reports/train.json into the run directory.
RunArtifacts run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_root);

// Loads <dir>/checkpoint.json and rebuilds the dataset from its config.
RunArtifacts load_run(const std::filesystem::path& directory);

// {"config_hash", "seed"} plus `body`.
nlohmann::json with_provenance(const ExperimentConfig& config, nlohmann::json body);
void write_report(const std::filesystem::path& path, const ExperimentConfig& config,
                  nlohmann::json body);
void write_text(const std::filesystem::path& path, const std::string& text);

nlohmann::json attack_report_json(const AttackReport& report);

// Plain P2 with maxval 255; values are clamped to [0, 1] before scaling.
std::string pgm_string(std::span<const double> pixels, std::size_t rows, std::size_t cols);

struct AblationRow {
  std::string variant;
  bool use_bn = true;
  bool use_consistency = true;
  std::vector<double> test_accuracy;  // per epoch
  double final_test_accuracy = 0.0;
};

// full, no-bn and no-consistency variants of the same config.
std::vector<AblationRow> ablate(const ExperimentConfig& config);

// First 1-based epoch at which the curve reaches `level`, or 0 if never.
int epochs_to_reach(std::span<const double> curve, double level);

// variant,use_bn,use_consistency,final_test_accuracy,epoch10_test_accuracy,
// epochs_to_reference. The reference level is the no-consistency run's
// accuracy at epoch min(10, epochs).
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace binvfl
