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

#include "binvfl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "binvfl/codebook.hpp"

namespace binvfl {

namespace fs = std::filesystem;
using nlohmann::json;

AlignedDataset build_dataset(const ExperimentConfig& config) {
  config.validate();
  const auto& d = config.dataset;
  const auto ratios = config.ratios();
  AlignedDataset ds;
  if (d.kind == "blobs") {
    ds = synth_blobs({d.classes, d.n_per_class, d.dim, d.separation, config.seed, d.offset});
    ds.partition = vertical_split(d.dim, ratios);
    ds = train_test_split(ds, config.train_ratio, config.seed + 1);
  } else if (d.kind == "images") {
    ds = synth_images({d.classes, d.n_per_class, d.side, d.noise, config.seed});
    ds.partition = image_center_split(d.side, ratios);
    ds = train_test_split(ds, config.train_ratio, config.seed + 1);
  } else {
    CsvOptions options;
    options.label_column = d.label_column;
    options.drop_columns = d.drop_columns;
    options.train_ratio = config.train_ratio;
    options.seed = config.seed + 1;
    ds = load_csv(d.path, options);
    if (ds.features.cols() < config.parties) {
      throw ConfigError("parties", "more parties than CSV feature columns");
    }
    ds.partition = vertical_split(ds.features.cols(), ratios);
    if (config.code_length != 0 && config.code_length < code_length(ds.num_classes)) {
      throw ConfigError("code_length", "too short for the " + std::to_string(ds.num_classes) +
                                           " classes in " + d.path);
    }
    if (static_cast<std::size_t>(config.attack.target_class) >= ds.num_classes) {
      throw ConfigError("attack.target_class", "must be < the number of classes in " + d.path);
    }
  }
  if (config.oversample) ds = oversample_balance(ds, config.seed + 2);
  ds.validate();
  return ds;
}

SystemSpec system_spec(const ExperimentConfig& config, const AlignedDataset& ds) {
  SystemSpec spec;
  spec.classes = ds.num_classes;
  spec.code_length = config.effective_code_length(ds.num_classes);
  spec.partition = ds.partition;
  spec.bottom_hidden = config.bottom_hidden;
  spec.top_hidden = config.top_hidden;
  spec.use_bn = config.use_bn;
  spec.affine_trainable = config.train_bn_affine;
  spec.adam.lr = config.optimizer.lr;
  spec.adam.weight_decay = config.optimizer.weight_decay;
  spec.seed = config.seed + 3;
  spec.codebook_seed = config.seed;
  return spec;
}

TrainConfig train_config(const ExperimentConfig& config) {
  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.decay_every = config.optimizer.decay_every;
  tc.decay_factor = config.optimizer.decay_factor;
  tc.use_consistency = config.use_consistency;
  tc.seed = config.seed + 4;
  return tc;
}

fs::path run_directory(const fs::path& out_root, const ExperimentConfig& config) {
  return out_root / config_hash(config);
}

json with_provenance(const ExperimentConfig& config, json body) {
  body["config_hash"] = config_hash(config);
  body["seed"] = config.seed;
  return body;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_report(const fs::path& path, const ExperimentConfig& config, json body) {
  write_text(path, with_provenance(config, std::move(body)).dump(2) + "\n");
}

RunArtifacts run_experiment(const ExperimentConfig& config, const fs::path& out_root) {
  config.validate();
  RunArtifacts run;
  run.directory = run_directory(out_root, config);
  run.dataset = build_dataset(config);
  run.checkpoint.config = config;
  run.checkpoint.system = make_system(system_spec(config, run.dataset));
  run.checkpoint.log = train(run.checkpoint.system, run.dataset, train_config(config));

  fs::create_directories(run.directory / "reports");
  save_checkpoint((run.directory / "checkpoint.json").string(), run.checkpoint);
  std::ostringstream log;
  run.checkpoint.log.write_csv(log);
  write_text(run.directory / "train_log.csv", log.str());

  const auto train_acc = run.checkpoint.log.accuracies("train");
  const auto test_acc = run.checkpoint.log.accuracies("test");
  const auto ortho = orthogonality_report(run.checkpoint.system.server.codebook);
  write_report(run.directory / "reports" / "train.json", config,
               {{"kind", "train"},
                {"classes", run.dataset.num_classes},
                {"code_length", run.checkpoint.system.server.code_length},
                {"parties", run.checkpoint.system.parties.size()},
                {"train_rows", run.dataset.train_rows().size()},
                {"test_rows", run.dataset.test_rows().size()},
                {"final_train_accuracy", train_acc.empty() ? 0.0 : train_acc.back()},
                {"final_test_accuracy", test_acc.empty() ? 0.0 : test_acc.back()},
                {"codebook_mean_abs_cos", ortho.mean_abs_cos},
                {"codebook_orthogonal_fraction", ortho.orthogonal_fraction}});
  return run;
}

RunArtifacts load_run(const fs::path& directory) {
  RunArtifacts run;
  run.directory = directory;
  run.checkpoint = load_checkpoint((directory / "checkpoint.json").string());
  run.dataset = build_dataset(run.checkpoint.config);
  const auto& sys = run.checkpoint.system;
  if (sys.parties.size() != run.dataset.partition.size()) {
    throw std::invalid_argument("checkpoint party count does not match its dataset");
  }
  for (std::size_t i = 0; i < sys.parties.size(); ++i) {
    if (sys.parties[i].feature_columns != run.dataset.partition[i]) {
      throw std::invalid_argument("checkpoint columns of party " + std::to_string(i) +
                                  " do not match its dataset");
    }
  }
  return run;
}

json attack_report_json(const AttackReport& report) {
  json targets = json::array();
  for (const auto& t : report.targets) {
    targets.push_back({{"label", t.label}, {"metrics", t.metrics}});
  }
  return {{"kind", report.kind}, {"metrics", report.metrics}, {"targets", targets}};
}

std::string pgm_string(std::span<const double> pixels, std::size_t rows, std::size_t cols) {
  if (rows * cols != pixels.size() || pixels.empty()) {
    throw DimensionError("pgm_string: layout does not match pixel count");
  }
  std::ostringstream out;
  out << "P2\n" << cols << ' ' << rows << "\n255\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = std::clamp(pixels[r * cols + c], 0.0, 1.0);
      out << (c ? " " : "") << static_cast<int>(std::lround(v * 255.0));
    }
    out << '\n';
  }
  return out.str();
}

std::vector<AblationRow> ablate(const ExperimentConfig& config) {
  const AlignedDataset ds = build_dataset(config);
  struct Variant {
    const char* name;
    bool bn;
    bool consistency;
  };
  const Variant variants[] = {{"full", true, true}, {"no-bn", false, true},
                              {"no-consistency", true, false}};
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    ExperimentConfig c = config;
    c.use_bn = v.bn;
    c.use_consistency = v.consistency;
    VflSystem sys = make_system(system_spec(c, ds));
    const auto log = train(sys, ds, train_config(c));
    AblationRow row;
    row.variant = v.name;
    row.use_bn = v.bn;
    row.use_consistency = v.consistency;
    row.test_accuracy = log.accuracies("test");
    row.final_test_accuracy = row.test_accuracy.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

int epochs_to_reach(std::span<const double> curve, double level) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i] >= level) return static_cast<int>(i) + 1;
  }
  return 0;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  auto at10 = [](const AblationRow& r) {
    return r.test_accuracy[std::min<std::size_t>(10, r.test_accuracy.size()) - 1];
  };
  double reference = 0.0;
  for (const auto& r : rows) {
    if (!r.use_consistency) reference = at10(r);
  }
  std::ostringstream out;
  out << "variant,use_bn,use_consistency,final_test_accuracy,epoch10_test_accuracy,"
         "epochs_to_reference\n"
      << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.variant << ',' << r.use_bn << ',' << r.use_consistency << ','
        << r.final_test_accuracy << ',' << at10(r) << ','
        << epochs_to_reach(r.test_accuracy, reference) << '\n';
  }
  return out.str();
}

}  // namespace binvfl
