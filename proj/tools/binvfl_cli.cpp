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

// Command-line driver: trains a system from a JSON config and runs the attack
// and defense studies against the stored checkpoint.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "binvfl/attacks.hpp"
#include "binvfl/codebook.hpp"
#include "binvfl/config.hpp"
#include "binvfl/defense.hpp"
#include "binvfl/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace binvfl;

namespace {

struct Options {
  std::string config_path;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> code_length;
  std::vector<double> epsilons;
  std::optional<double> omega;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<int> steps;
  // gen-codes
  std::size_t classes = 10;
  std::size_t gen_code_length = 0;
  std::uint64_t gen_seed = 0;
};

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

RunArtifacts open_run(const Options& o, const ExperimentConfig& config) {
  const fs::path dir = run_directory(o.out, config);
  if (!fs::exists(dir / "checkpoint.json")) {
    throw std::runtime_error("missing checkpoint " + (dir / "checkpoint.json").string() +
                             " (run `binvfl train` with the same config first)");
  }
  auto run = load_run(dir);
  const auto stored = run.checkpoint.system.server.code_length;
  if (o.code_length && *o.code_length != stored) {
    throw std::runtime_error("requested code length " + std::to_string(*o.code_length) +
                             " but the checkpoint uses " + std::to_string(stored));
  }
  return run;
}

std::string csv_of(const auto& table) {
  std::ostringstream out;
  table.write_csv(out);
  return out.str();
}

int gen_codes(const Options& o) {
  const std::size_t d = o.gen_code_length ? o.gen_code_length : code_length(o.classes);
  const auto cb = generate_codebook(o.classes, d, o.gen_seed);
  std::ostringstream csv;
  csv << "class";
  for (std::size_t b = 0; b < d; ++b) csv << ",b" << b;
  csv << '\n';
  for (std::size_t c = 0; c < cb.classes; ++c) {
    csv << c;
    for (double v : cb.code(c)) csv << ',' << static_cast<int>(v);
    csv << '\n';
  }
  std::cout << csv.str();
  const fs::path path = fs::path(o.out) / ("codes_c" + std::to_string(o.classes) + "_d" +
                                           std::to_string(d) + "_s" +
                                           std::to_string(o.gen_seed) + ".csv");
  write_text(path, csv.str());
  const auto ortho = orthogonality_report(cb);
  std::cerr << "saved " << path.string() << "; mean |cos| " << ortho.mean_abs_cos
            << ", orthogonal pairs " << ortho.orthogonal_fraction << '\n';
  return 0;
}

int train_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto run = run_experiment(config, o.out);
  const auto test = run.checkpoint.log.accuracies("test");
  std::cout << run.directory.string() << '\n'
            << "final test accuracy " << (test.empty() ? 0.0 : test.back()) << '\n';
  return 0;
}

int eval_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto run = open_run(o, config);
  json body = {{"kind", "eval"}};
  for (const char* split : {"train", "test"}) {
    const auto rows = std::string(split) == "train" ? run.dataset.train_rows()
                                                    : run.dataset.test_rows();
    const auto sub = take_rows(run.dataset, rows);
    const auto ev = evaluate(run.checkpoint.system, sub.features, sub.labels, config.use_consistency);
    body[split] = {{"accuracy", ev.accuracy}, {"ce", ev.ce}, {"cos_term", ev.cos_term}};
    std::cout << split << " accuracy " << ev.accuracy << '\n';
  }
  write_report(run.directory / "reports" / "eval.json", config, body);
  return 0;
}

int reconstruct_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto run = open_run(o, config);
  ReconstructionConfig rc;
  rc.lambda = o.lambda.value_or(config.attack.lambda);
  rc.steps = o.steps.value_or(config.attack.steps);
  rc.lr = config.attack.lr;
  rc.seed = config.seed;
  const auto report = reconstruction_study(run.checkpoint.system, run.dataset, config.attack.party, rc);
  json body = attack_report_json(report);
  body["parameters"] = {{"lambda", rc.lambda}, {"steps", rc.steps}, {"party", config.attack.party}};
  const fs::path reports = run.directory / "reports";
  write_report(reports / "reconstruct.json", config, body);

  const auto& ds = run.dataset;
  const std::size_t width = report.targets.front().input.size();
  const std::size_t rows = ds.image_side ? ds.image_side : 1;
  for (const auto& t : report.targets) {
    const std::string stem = "reconstruct_class" + std::to_string(t.label);
    write_text(reports / (stem + ".pgm"), pgm_string(t.input, rows, width / rows));
    write_text(reports / (stem + "_mean.pgm"), pgm_string(t.output, rows, width / rows));
  }
  std::cout << "ssim " << report.metrics.at("ssim") << " kld " << report.metrics.at("kld")
            << " dcor " << report.metrics.at("dcor") << '\n';
  return 0;
}

int pgd_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto run = open_run(o, config);
  PgdStudyConfig pc;
  pc.attack.omega = o.omega.value_or(config.attack.omega);
  pc.attack.eta = o.eta.value_or(config.attack.eta);
  pc.attack.steps = o.steps.value_or(config.attack.pgd_steps);
  pc.attack.adversary = config.attack.party;
  pc.attack.target_class = config.attack.target_class;
  pc.samples = config.attack.samples;
  pc.seed = config.seed;
  const auto report = pgd_study(run.checkpoint.system, run.dataset, pc);
  write_report(run.directory / "reports" / "pgd.json", config, attack_report_json(report));
  std::cout << "success rate " << report.metrics.at("success_rate") << '\n';
  return 0;
}

int pla_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto run = open_run(o, config);
  ProbeConfig pc;
  pc.hidden = config.attack.probe_hidden;
  pc.epochs = config.attack.probe_epochs;
  const auto report =
      label_inference_study(run.checkpoint.system, run.dataset, config.attack.party, pc, config.seed);
  write_report(run.directory / "reports" / "pla.json", config, attack_report_json(report));
  std::cout << "probe accuracy continuous " << report.metrics.at("probe_accuracy_continuous")
            << " codes " << report.metrics.at("probe_accuracy_codes") << '\n';
  return 0;
}

int detect_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto run = open_run(o, config);
  const auto& sys = run.checkpoint.system;
  const auto test = take_rows(run.dataset, run.dataset.test_rows());
  const fs::path reports = run.directory / "reports";

  const auto observed = consistency_audit(sys, test.features, test.labels, AuditMode::kObserved);
  write_text(reports / "audit_observed.csv", csv_of(observed));
  json body = {{"kind", "detect"}};
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  body["observed"] = {{"average_correct", opt(observed.average_correct)},
                      {"average_wrong", opt(observed.average_wrong)}};
  if (sys.parties.size() == 2 && sys.server.code_length <= 16) {
    const auto fixed = consistency_audit(sys, test.features, test.labels, AuditMode::kFixedReference);
    write_text(reports / "audit_fixed.csv", csv_of(fixed));
    body["fixed_reference"] = {{"average_correct", opt(fixed.average_correct)},
                               {"average_wrong", opt(fixed.average_wrong)}};
  }
  const auto policy = DetectionPolicy::for_length(sys.server.code_length);
  const auto rates = detection_rates(sys, test.features, policy, config.seed);
  body["flag_rate_honest"] = rates.honest;
  body["flag_rate_random_party"] = rates.random_party;
  body["threshold"] = policy.threshold;
  write_report(reports / "detect.json", config, body);
  std::cout << csv_of(observed) << "flag rate honest " << rates.honest << " random party "
            << rates.random_party << '\n';
  return 0;
}

int dp_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto run = open_run(o, config);
  const auto eps = o.epsilons.empty() ? config.defense.epsilons : o.epsilons;
  const auto test = take_rows(run.dataset, run.dataset.test_rows());
  const auto table =
      dp_sweep(run.checkpoint.system, test.features, test.labels, eps, config.seed, config.defense.runs);
  const std::string csv = csv_of(table);
  write_text(run.directory / "reports" / "dp_sweep.csv", csv);
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"epsilon", std::isinf(r.epsilon) ? json("inf") : json(r.epsilon)},
                    {"accuracy", r.accuracy},
                    {"accuracy_std", r.accuracy_std}});
  }
  write_report(run.directory / "reports" / "dp_sweep.json", config,
               {{"kind", "dp-sweep"}, {"rows", rows}});
  std::cout << csv;
  return 0;
}

int ablate_cmd(const Options& o) {
  const auto config = resolve_config(o);
  const auto rows = ablate(config);
  const std::string csv = ablation_csv(rows);
  const fs::path reports = run_directory(o.out, config) / "reports";
  write_text(reports / "ablation.csv", csv);
  json body = {{"kind", "ablate"}};
  for (const auto& r : rows) body["variants"][r.variant] = r.test_accuracy;
  write_report(reports / "ablation.json", config, body);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary-code vertical federated learning experiments"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output root directory");
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--code-length", o.code_length, "expected code length of the checkpoint");
  };

  auto* gen = app.add_subcommand("gen-codes", "generate a class codebook");
  gen->add_option("--classes", o.classes, "number of classes")->required();
  gen->add_option("--code-length", o.gen_code_length, "bits per code (default: minimum)");
  gen->add_option("--seed", o.gen_seed, "codebook seed");
  gen->add_option("--out", o.out, "output directory");

  auto* train = app.add_subcommand("train", "train and write a checkpoint");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* rec = app.add_subcommand("attack-reconstruct", "reconstruct inputs from class codes");
  auto* pgd = app.add_subcommand("attack-pgd", "PGD on one party's submitted codes");
  auto* pla = app.add_subcommand("attack-pla", "passive label inference probe");
  auto* detect = app.add_subcommand("detect", "cross-party code consistency audit");
  auto* dp = app.add_subcommand("dp-sweep", "accuracy under Laplace noise on the codes");
  auto* abl = app.add_subcommand("ablate", "retrain without BN / without the cosine term");
  for (auto* sub : {train, eval, rec, pgd, pla, detect, dp, abl}) common(sub);
  rec->add_option("--lambda", o.lambda, "TV weight");
  rec->add_option("--steps", o.steps, "gradient steps");
  pgd->add_option("--omega", o.omega, "perturbation bound");
  pgd->add_option("--eta", o.eta, "step size");
  pgd->add_option("--steps", o.steps, "PGD iterations");
  dp->add_option("--epsilon", o.epsilons, "privacy budgets (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_codes(o);
    if (*train) return train_cmd(o);
    if (*eval) return eval_cmd(o);
    if (*rec) return reconstruct_cmd(o);
    if (*pgd) return pgd_cmd(o);
    if (*pla) return pla_cmd(o);
    if (*detect) return detect_cmd(o);
    if (*dp) return dp_cmd(o);
    if (*abl) return ablate_cmd(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
