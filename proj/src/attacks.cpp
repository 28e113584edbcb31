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

#include "binvfl/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "binvfl/batch_norm.hpp"
#include "binvfl/dense.hpp"
#include "binvfl/hash_layer.hpp"
#include "binvfl/loss.hpp"
#include "binvfl/metrics.hpp"
#include "binvfl/random.hpp"

namespace binvfl {

void AttackReport::check_ranges() const {
  auto check = [](const std::string& key, double v) {
    if (!std::isfinite(v)) throw std::domain_error("metric " + key + " is not finite");
    if (key.rfind("kld", 0) == 0 && v < 0.0) throw std::domain_error("metric " + key + " < 0");
    const bool unit = key.find("ssim") != std::string::npos ||
                      key.find("dcor") != std::string::npos ||
                      key.find("rate") != std::string::npos ||
                      key.find("accuracy") != std::string::npos;
    if (unit && key.find("raw") == std::string::npos && (v < 0.0 || v > 1.0)) {
      throw std::domain_error("metric " + key + " outside [0, 1]");
    }
  };
  for (const auto& [k, v] : metrics) check(k, v);
  for (const auto& t : targets) {
    for (const auto& [k, v] : t.metrics) check(k, v);
  }
}

double total_variation(std::span<const double> image, std::size_t rows, std::size_t cols) {
  if (rows * cols != image.size()) throw DimensionError("total_variation: layout mismatch");
  double tv = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double here = image[i * cols + j];
      const double dv = i + 1 < rows ? image[(i + 1) * cols + j] - here : 0.0;
      const double dh = j + 1 < cols ? image[i * cols + j + 1] - here : 0.0;
      tv += std::sqrt(dv * dv + dh * dh);
    }
  }
  return tv;
}

std::vector<double> total_variation_grad(std::span<const double> image, std::size_t rows,
                                         std::size_t cols, double smoothing) {
  if (rows * cols != image.size()) throw DimensionError("total_variation_grad: layout mismatch");
  std::vector<double> grad(image.size(), 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t at = i * cols + j;
      const double here = image[at];
      const double dv = i + 1 < rows ? image[at + cols] - here : 0.0;
      const double dh = j + 1 < cols ? image[at + 1] - here : 0.0;
      const double norm = std::sqrt(dv * dv + dh * dh + smoothing);
      grad[at] -= (dv + dh) / norm;
      if (i + 1 < rows) grad[at + cols] += dv / norm;
      if (j + 1 < cols) grad[at + 1] += dh / norm;
    }
  }
  return grad;
}

namespace {

struct Objective {
  const PartyState& party;
  std::span<const double> target;
  double lambda;
  std::size_t rows;
  std::size_t cols;

  Matrix pre_sign(const ForwardResult& fwd) const {
    return party.use_bn ? bn_forward_infer(fwd.output, party.bn) : fwd.output;
  }

  double value(const std::vector<double>& x) const {
    const auto fwd = forward(party.bottom, Matrix::row_vector(x));
    const Matrix out = pre_sign(fwd);
    double mse = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
      mse += (out(0, k) - target[k]) * (out(0, k) - target[k]);
    }
    mse /= static_cast<double>(target.size());
    return mse + lambda * total_variation(x, rows, cols);
  }

  std::vector<double> gradient(const std::vector<double>& x) const {
    const auto fwd = forward(party.bottom, Matrix::row_vector(x));
    const Matrix out = pre_sign(fwd);
    Matrix grad_out(1, target.size());
    for (std::size_t k = 0; k < target.size(); ++k) {
      grad_out(0, k) = 2.0 * (out(0, k) - target[k]) / static_cast<double>(target.size());
    }
    if (party.use_bn) grad_out = bn_infer_backward(grad_out, party.bn);
    const auto back = backward(party.bottom, fwd.cache, grad_out);
    std::vector<double> grad(back.grad_input.data().begin(), back.grad_input.data().end());
    if (lambda != 0.0) {
      const auto tv = total_variation_grad(x, rows, cols);
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += lambda * tv[k];
    }
    return grad;
  }
};

}  // namespace

ReconstructionResult reconstruct_from_code(const PartyState& party,
                                           std::span<const double> target_code,
                                           const ReconstructionConfig& config) {
  if (config.steps < 1) throw std::invalid_argument("reconstruct_from_code: steps must be >= 1");
  if (target_code.size() != party.code_length()) {
    throw DimensionError("reconstruct_from_code: target code length " +
                         std::to_string(target_code.size()) + " != " +
                         std::to_string(party.code_length()));
  }
  if (party.use_bn && party.bn.batches_seen == 0) {
    throw std::logic_error("reconstruct_from_code: party BN was never trained");
  }
  const std::size_t n = party.feature_columns.size();
  const std::size_t rows = config.image_rows == 0 ? 1 : config.image_rows;
  if (n % rows != 0) throw DimensionError("reconstruct_from_code: image rows do not divide input");
  const Objective objective{party, target_code, config.lambda, rows, n / rows};

  Rng rng(config.seed);
  auto project = [&](std::vector<double>& x) {
    if (config.clamp_unit) {
      for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
    }
  };
  ReconstructionResult result;
  result.input.resize(n);
  for (auto& v : result.input) v = rng.uniform(config.init_low, config.init_high);
  project(result.input);
  double current = objective.value(result.input);
  if (!std::isfinite(current)) throw std::domain_error("reconstruct_from_code: non-finite objective");
  result.objective_trace.push_back(current);

  std::vector<double> candidate(n);
  for (int step = 0; step < config.steps; ++step) {
    const auto grad = objective.gradient(result.input);
    double lr = config.lr;
    double next = current;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      for (std::size_t k = 0; k < n; ++k) candidate[k] = result.input[k] - lr * grad[k];
      project(candidate);
      next = objective.value(candidate);
      if (!std::isfinite(next)) throw std::domain_error("reconstruct_from_code: non-finite objective");
      if (!config.step_halving || next <= current) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (accepted) {
      result.input = candidate;
      current = next;
    }
    result.objective_trace.push_back(current);
  }
  return result;
}

AttackReport reconstruction_study(const VflSystem& system, const AlignedDataset& ds,
                                  std::size_t party_index, const ReconstructionConfig& config) {
  if (party_index >= system.parties.size()) throw std::out_of_range("reconstruction_study: party");
  if (!system.server.trained) throw std::logic_error("reconstruction_study: system not trained");
  const auto& party = system.parties[party_index];
  const auto& cb = system.server.codebook;
  const Matrix local = select_cols(ds.features, party.feature_columns);

  ReconstructionConfig cfg = config;
  if (cfg.image_rows == 0 && ds.image_side > 0) cfg.image_rows = ds.image_side;

  AttackReport report;
  report.kind = "reconstruct";
  double ssim_sum = 0.0, kld_sum = 0.0, dcor_sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t c = 0; c < cb.classes; ++c) {
    std::vector<double> mean(local.cols(), 0.0);
    std::size_t count = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (ds.labels[r] != static_cast<int>(c) || !ds.train_mask[r]) continue;
      auto row = local.row(r);
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
      ++count;
    }
    if (count == 0) continue;
    for (auto& v : mean) v /= static_cast<double>(count);

    cfg.seed = config.seed + c;
    auto rec = reconstruct_from_code(party, cb.code(c), cfg);

    AttackTarget target;
    target.label = static_cast<int>(c);
    target.metrics["ssim"] = ssim_report(rec.input, mean);
    target.metrics["ssim_raw"] = ssim(rec.input, mean);
    target.metrics["kld"] = kld_hist(mean, rec.input, 10);
    target.metrics["dcor"] = dcor(rec.input, mean);
    target.metrics["final_objective"] = rec.objective_trace.back();
    ssim_sum += target.metrics["ssim"];
    kld_sum += target.metrics["kld"];
    dcor_sum += target.metrics["dcor"];
    ++scored;
    target.input = std::move(rec.input);
    target.output = std::move(mean);
    report.targets.push_back(std::move(target));
    report.traces.push_back(std::move(rec.objective_trace));
  }
  if (scored == 0) throw std::invalid_argument("reconstruction_study: no class has training rows");
  report.metrics["ssim"] = ssim_sum / static_cast<double>(scored);
  report.metrics["kld"] = kld_sum / static_cast<double>(scored);
  report.metrics["dcor"] = dcor_sum / static_cast<double>(scored);
  report.metrics["lambda"] = config.lambda;
  report.metrics["steps"] = config.steps;
  report.check_ranges();
  return report;
}

PgdOutcome pgd_attack(const VflSystem& system, std::span<const double> sample,
                      const PgdConfig& config) {
  const auto& server = system.server;
  if (!server.trained) throw std::logic_error("pgd_attack: system not trained");
  if (!(config.omega > 0.0) || !(config.eta > 0.0)) {
    throw std::invalid_argument("pgd_attack: omega and eta must be positive");
  }
  if (config.steps < 1) throw std::invalid_argument("pgd_attack: steps must be >= 1");
  if (config.adversary >= system.parties.size()) throw std::out_of_range("pgd_attack: adversary");
  if (config.target_class < 0 || static_cast<std::size_t>(config.target_class) >= server.classes()) {
    throw std::out_of_range("pgd_attack: target class");
  }

  auto codes = encode_all(system, Matrix::row_vector(sample));
  const std::size_t d = server.code_length;
  const std::size_t offset = config.adversary * d;
  Matrix submitted = server_aggregate(codes);
  const std::vector<double> x0(codes[config.adversary].data().begin(),
                               codes[config.adversary].data().end());
  std::vector<double> x = x0;
  const int target[] = {config.target_class};

  for (int step = 0; step < config.steps; ++step) {
    std::copy(x.begin(), x.end(), submitted.row(0).begin() + static_cast<std::ptrdiff_t>(offset));
    const auto fwd = forward(server.top, submitted);
    const auto ce = softmax_cross_entropy(fwd.output, target);
    const auto back = backward(server.top, fwd.cache, ce.grad);
    for (std::size_t k = 0; k < d; ++k) {
      const double g = back.grad_input(0, offset + k);
      const double direction = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      x[k] -= config.eta * direction;
      const double phi = std::clamp(x[k] - x0[k], -config.omega, config.omega);
      x[k] = x0[k] + phi;
    }
  }
  std::copy(x.begin(), x.end(), submitted.row(0).begin() + static_cast<std::ptrdiff_t>(offset));

  PgdOutcome out;
  out.prediction = predict_from_codes(server, submitted).front();
  out.success = out.prediction == config.target_class;
  out.original_code = x0;
  out.perturbed_code = x;
  for (std::size_t k = 0; k < d; ++k) {
    out.max_abs_perturbation = std::max(out.max_abs_perturbation, std::abs(x[k] - x0[k]));
  }
  return out;
}

AttackReport pgd_study(const VflSystem& system, const AlignedDataset& ds,
                       const PgdStudyConfig& config) {
  if (config.samples == 0) throw std::invalid_argument("pgd_study: zero samples");
  const int target = config.attack.target_class;
  const auto clean = predict(system, ds.features);
  auto pick = [&](bool test_only) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (test_only && ds.train_mask[r]) continue;
      if (ds.labels[r] != target && clean[r] != target) rows.push_back(r);
    }
    return rows;
  };
  auto candidates = pick(true);
  if (candidates.empty()) candidates = pick(false);
  if (candidates.empty()) throw std::invalid_argument("pgd_study: no eligible samples");

  Rng rng(config.seed);
  rng.shuffle(candidates);
  AttackReport report;
  report.kind = "pgd";
  std::size_t successes = 0;
  double max_phi = 0.0;
  for (std::size_t i = 0; i < config.samples; ++i) {
    const std::size_t row = candidates[i % candidates.size()];
    const auto outcome = pgd_attack(system, ds.features.row(row), config.attack);
    successes += outcome.success;
    max_phi = std::max(max_phi, outcome.max_abs_perturbation);
    AttackTarget t;
    t.label = ds.labels[row];
    t.input = outcome.perturbed_code;
    t.output = sign_forward(Matrix::row_vector(outcome.perturbed_code)).values();
    t.metrics["success"] = outcome.success ? 1.0 : 0.0;
    t.metrics["prediction"] = outcome.prediction;
    t.metrics["max_abs_perturbation"] = outcome.max_abs_perturbation;
    report.targets.push_back(std::move(t));
  }
  report.metrics["success_rate"] =
      static_cast<double>(successes) / static_cast<double>(config.samples);
  report.metrics["successes"] = static_cast<double>(successes);
  report.metrics["samples"] = static_cast<double>(config.samples);
  report.metrics["max_abs_perturbation"] = max_phi;
  report.metrics["omega"] = config.attack.omega;
  report.metrics["eta"] = config.attack.eta;
  report.metrics["steps"] = config.attack.steps;
  report.metrics["target_class"] = target;
  report.check_ranges();
  return report;
}

double passive_label_inference(const Matrix& representations, std::span<const int> labels,
                               const ProbeConfig& config, std::uint64_t seed) {
  if (representations.rows() != labels.size()) {
    throw DimensionError("passive_label_inference: rows/labels mismatch");
  }
  if (representations.rows() < 2) throw std::invalid_argument("passive_label_inference: too few rows");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  const int min_label = *std::min_element(labels.begin(), labels.end());
  if (min_label < 0) throw std::out_of_range("passive_label_inference: negative label");
  if (max_label == min_label) throw std::invalid_argument("passive_label_inference: single-class labels");
  const auto classes = static_cast<std::size_t>(max_label) + 1;

  Rng rng(seed);
  auto order = iota_indices(representations.rows());
  rng.shuffle(order);
  auto n_train = static_cast<std::size_t>(
      std::lround(config.train_ratio * static_cast<double>(order.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  const std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  std::vector<std::size_t> widths = {representations.cols()};
  if (config.hidden > 0) widths.push_back(config.hidden);
  widths.push_back(classes);
  DenseNet probe = DenseNet::init(widths, rng);
  AdamState opt = make_adam(probe.parameters(), config.adam);

  const Matrix x_train = select_rows(representations, train_idx);
  std::vector<int> y_train;
  for (auto i : train_idx) y_train.push_back(labels[i]);
  auto batch_order = iota_indices(train_idx.size());
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(batch_order);
    for (std::size_t start = 0; start < batch_order.size(); start += batch) {
      const std::size_t end = std::min(batch_order.size(), start + batch);
      const std::span<const std::size_t> idx(batch_order.data() + start, end - start);
      std::vector<int> y;
      for (auto k : idx) y.push_back(y_train[k]);
      const auto fwd = forward(probe, select_rows(x_train, idx));
      const auto ce = softmax_cross_entropy(fwd.output, y);
      const auto back = backward(probe, fwd.cache, ce.grad);
      auto params = probe.parameters();
      adam_step(params, back.grads.views(), opt);
    }
  }

  const auto preds = argmax_rows(forward_output(probe, select_rows(representations, test_idx)));
  std::vector<int> y_test;
  for (auto i : test_idx) y_test.push_back(labels[i]);
  return accuracy(preds, y_test);
}

AttackReport label_inference_study(const VflSystem& system, const AlignedDataset& ds,
                                   std::size_t party_index, const ProbeConfig& config,
                                   std::uint64_t seed) {
  if (party_index >= system.parties.size()) throw std::out_of_range("label_inference_study: party");
  const auto& party = system.parties[party_index];
  const auto out = party_encode(party, select_cols(ds.features, party.feature_columns));
  AttackReport report;
  report.kind = "pla";
  report.metrics["probe_accuracy_continuous"] =
      passive_label_inference(out.normalized, ds.labels, config, seed);
  report.metrics["probe_accuracy_codes"] =
      passive_label_inference(out.codes, ds.labels, config, seed);
  report.metrics["party"] = static_cast<double>(party_index);
  report.check_ranges();
  return report;
}

}  // namespace binvfl
