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

#include "binvfl/protocol.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include "binvfl/hash_layer.hpp"
#include "binvfl/loss.hpp"
#include "binvfl/random.hpp"

namespace binvfl {

std::vector<std::span<double>> PartyState::parameters() {
  auto params = bottom.parameters();
  if (trains_affine()) {
    params.emplace_back(bn.gamma);
    params.emplace_back(bn.beta);
  }
  return params;
}

void PartyState::validate() const {
  if (feature_columns.empty()) {
    throw std::invalid_argument("party " + std::to_string(id) + ": no feature columns");
  }
  if (bottom.input_dim() != feature_columns.size()) {
    throw DimensionError("party " + std::to_string(id) + ": bottom input " +
                         std::to_string(bottom.input_dim()) + " != " +
                         std::to_string(feature_columns.size()) + " feature columns");
  }
  if (use_bn) {
    bn.validate();
    if (bn.dim() != code_length()) {
      throw DimensionError("party " + std::to_string(id) + ": BN dimension != code length");
    }
  }
}

namespace {

void check_local(const PartyState& party, const Matrix& x) {
  if (x.cols() != party.feature_columns.size()) {
    throw DimensionError("party " + std::to_string(party.id) + ": got " + std::to_string(x.cols()) +
                         " columns, owns " + std::to_string(party.feature_columns.size()));
  }
}

}  // namespace

PartyOutput party_forward(PartyState& party, const Matrix& local_features, Mode mode) {
  if (mode == Mode::kInfer) return party_encode(party, local_features);
  check_local(party, local_features);
  PartyOutput out;
  auto fwd = forward(party.bottom, local_features);
  out.embedding = std::move(fwd.output);
  out.bottom_cache = std::move(fwd.cache);
  if (party.use_bn) {
    auto bn = bn_forward_train(out.embedding, party.bn);
    out.normalized = std::move(bn.output);
    out.bn_cache = std::move(bn.cache);
  } else {
    if (local_features.rows() < 2) {
      throw std::invalid_argument("party_forward: training batch of size < 2");
    }
    out.normalized = out.embedding;
  }
  out.codes = sign_forward(out.normalized);
  return out;
}

PartyOutput party_encode(const PartyState& party, const Matrix& local_features) {
  check_local(party, local_features);
  PartyOutput out;
  auto fwd = forward(party.bottom, local_features);
  out.embedding = std::move(fwd.output);
  out.bottom_cache = std::move(fwd.cache);
  out.normalized = party.use_bn ? bn_forward_infer(out.embedding, party.bn) : out.embedding;
  out.codes = sign_forward(out.normalized);
  return out;
}

std::vector<std::span<const double>> PartyGrads::views(const PartyState& party) const {
  auto out = bottom.views();
  if (party.trains_affine()) {
    out.emplace_back(grad_gamma);
    out.emplace_back(grad_beta);
  }
  return out;
}

PartyGrads party_gradients(const PartyState& party, const PartyOutput& out,
                           const Matrix& grad_codes) {
  require_same_shape(grad_codes, out.codes, "party_gradients");
  PartyGrads g;
  g.grad_normalized = ste_backward(grad_codes);
  Matrix grad_embedding;
  if (party.use_bn) {
    if (!out.bn_cache) throw std::logic_error("party_gradients: forward pass was not in train mode");
    auto bn = bn_backward(g.grad_normalized, *out.bn_cache);
    grad_embedding = std::move(bn.grad_input);
    g.grad_gamma = std::move(bn.grad_gamma);
    g.grad_beta = std::move(bn.grad_beta);
  } else {
    grad_embedding = g.grad_normalized;
  }
  g.bottom = backward(party.bottom, out.bottom_cache, grad_embedding).grads;
  return g;
}

void apply_party_update(PartyState& party, const PartyGrads& grads) {
  auto params = party.parameters();
  auto views = grads.views(party);
  adam_step(params, views, party.optimizer);
}

void ServerState::validate() const {
  if (top.input_dim() != num_parties * code_length) {
    throw DimensionError("server: top input " + std::to_string(top.input_dim()) +
                         " != parties * code length");
  }
  if (top.output_dim() != codebook.classes) {
    throw DimensionError("server: top output does not match codebook classes");
  }
  if (codebook.code_length != code_length) {
    throw DimensionError("server: codebook length does not match code length");
  }
}

Matrix server_aggregate(std::span<const Matrix> codes) {
  if (codes.empty()) throw std::invalid_argument("server_aggregate: no party codes");
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].cols() == 0) {
      throw std::invalid_argument("server_aggregate: party " + std::to_string(i) + " missing");
    }
    if (codes[i].rows() != codes.front().rows()) {
      throw DimensionError("server_aggregate: party " + std::to_string(i) + " row count differs");
    }
  }
  return hconcat(codes);
}

std::vector<Matrix> split_code_blocks(const Matrix& codes, std::size_t parties,
                                      std::size_t code_length) {
  if (codes.cols() != parties * code_length) {
    throw DimensionError("split_code_blocks: width " + std::to_string(codes.cols()) +
                         " != parties * code length");
  }
  std::vector<Matrix> blocks;
  for (std::size_t i = 0; i < parties; ++i) {
    blocks.push_back(column_block(codes, i * code_length, code_length));
  }
  return blocks;
}

Matrix rebinarize_guard(const Matrix& submitted) { return sign_forward(submitted); }

LossResult compute_loss(const ServerState& server, const Matrix& codes,
                        std::span<const int> labels, bool use_consistency) {
  const std::size_t n = server.num_parties;
  const std::size_t d = server.code_length;
  if (codes.cols() != n * d) {
    throw DimensionError("compute_loss: code width " + std::to_string(codes.cols()) +
                         " != " + std::to_string(n * d));
  }
  LossResult result;
  auto fwd = forward(server.top, codes);
  auto ce = softmax_cross_entropy(fwd.output, labels);
  auto back = backward(server.top, fwd.cache, ce.grad);
  result.ce = ce.loss;
  result.logits = std::move(fwd.output);
  result.grad_codes = std::move(back.grad_input);
  result.top_grads = std::move(back.grads);

  if (use_consistency && codes.rows() > 0) {
    const Matrix targets = target_codes(labels, server.codebook);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto cos = cosine_loss(column_block(codes, i * d, d), targets);
      result.cos_term += cos.loss * inv_n;
      for (std::size_t r = 0; r < codes.rows(); ++r) {
        auto dst = result.grad_codes.row(r).subspan(i * d, d);
        auto src = cos.grad.row(r);
        for (std::size_t k = 0; k < d; ++k) dst[k] += src[k] * inv_n;
      }
    }
  }
  result.total = result.ce + result.cos_term;
  return result;
}

VflSystem make_system(const SystemSpec& spec) {
  if (spec.partition.empty()) throw std::invalid_argument("make_system: empty partition");
  if (spec.code_length < code_length(spec.classes)) {
    throw std::invalid_argument("make_system: code length " + std::to_string(spec.code_length) +
                                " below minimum " + std::to_string(code_length(spec.classes)));
  }
  Rng rng(spec.seed);
  VflSystem sys;
  for (std::size_t i = 0; i < spec.partition.size(); ++i) {
    PartyState p;
    p.id = i;
    p.feature_columns = spec.partition[i];
    std::vector<std::size_t> widths = {p.feature_columns.size()};
    widths.insert(widths.end(), spec.bottom_hidden.begin(), spec.bottom_hidden.end());
    widths.push_back(spec.code_length);
    p.bottom = DenseNet::init(widths, rng);
    p.use_bn = spec.use_bn;
    p.bn = BatchNormState::identity(spec.code_length);
    p.bn.affine_trainable = spec.affine_trainable;
    p.optimizer = make_adam(p.parameters(), spec.adam);
    p.validate();
    sys.parties.push_back(std::move(p));
  }
  auto& server = sys.server;
  server.num_parties = spec.partition.size();
  server.code_length = spec.code_length;
  server.codebook = generate_codebook(spec.classes, spec.code_length, spec.codebook_seed);
  const std::size_t top_widths[] = {server.num_parties * spec.code_length, spec.top_hidden,
                                    spec.classes};
  server.top = DenseNet::init(top_widths, rng);
  server.optimizer = make_adam(server.top.parameters(), spec.adam);
  server.validate();
  return sys;
}

std::vector<double> TrainingLog::accuracies(const std::string& split) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r.accuracy);
  }
  return out;
}

void TrainingLog::write_csv(std::ostream& out) const {
  out << "epoch,split,accuracy,ce,cos_term,lr\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(10);
  for (const auto& r : records) {
    out << r.epoch << ',' << r.split << ',' << r.accuracy << ',' << r.ce << ',' << r.cos_term
        << ',' << r.lr << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

std::vector<Matrix> encode_all(const VflSystem& system, const Matrix& features) {
  std::vector<Matrix> codes;
  for (const auto& party : system.parties) {
    codes.push_back(party_encode(party, select_cols(features, party.feature_columns)).codes);
  }
  return codes;
}

std::vector<int> predict_from_codes(const ServerState& server, const Matrix& submitted) {
  return argmax_rows(forward_output(server.top, rebinarize_guard(submitted)));
}

std::vector<int> predict(const VflSystem& system, const Matrix& features) {
  return predict_from_codes(system.server, server_aggregate(encode_all(system, features)));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Evaluation evaluate(const VflSystem& system, const Matrix& features, std::span<const int> labels,
                    bool use_consistency) {
  Evaluation ev;
  if (features.rows() == 0) return ev;
  const Matrix codes = rebinarize_guard(server_aggregate(encode_all(system, features)));
  const auto loss = compute_loss(system.server, codes, labels, use_consistency);
  ev.accuracy = accuracy(argmax_rows(loss.logits), labels);
  ev.ce = loss.ce;
  ev.cos_term = loss.cos_term;
  return ev;
}

TrainingLog train(VflSystem& system, const AlignedDataset& ds, const TrainConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 2) throw std::invalid_argument("train: batch size must be >= 2");
  ds.validate();
  auto& server = system.server;
  server.validate();
  const std::size_t n_parties = system.parties.size();
  if (n_parties != server.num_parties) throw DimensionError("train: party count mismatch");
  if (ds.num_classes > server.classes()) throw DimensionError("train: more classes than outputs");

  const auto train_rows = ds.train_rows();
  const auto test_rows = ds.test_rows();
  if (train_rows.size() < 2) throw std::invalid_argument("train: fewer than 2 training rows");
  const Subset train_set = take_rows(ds, train_rows);
  const Subset test_set = take_rows(ds, test_rows);

  // Each party sees only its own columns from here on.
  std::vector<Matrix> local_train;
  for (auto& party : system.parties) {
    party.validate();
    local_train.push_back(select_cols(train_set.features, party.feature_columns));
  }

  Rng rng(config.seed);
  TrainingLog log;
  const double base_lr_server = server.optimizer.config.lr;
  std::vector<double> base_lr_party;
  for (const auto& p : system.parties) base_lr_party.push_back(p.optimizer.config.lr);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, base_lr_server, config.decay_every, config.decay_factor);
    server.optimizer.config.lr = lr;
    for (std::size_t i = 0; i < n_parties; ++i) {
      system.parties[i].optimizer.config.lr =
          lr_schedule(epoch, base_lr_party[i], config.decay_every, config.decay_factor);
    }

    auto order = iota_indices(train_rows.size());
    rng.shuffle(order);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batches.emplace_back(start, std::min(order.size(), start + config.batch_size));
    }
    // A trailing single row cannot be batch-normalized; fold it into the previous batch.
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    double ce_sum = 0.0, cos_sum = 0.0;
    for (const auto& [begin, end] : batches) {
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (auto k : idx) labels.push_back(train_set.labels[k]);

      std::vector<PartyOutput> outputs;
      std::vector<Matrix> codes;
      for (std::size_t i = 0; i < n_parties; ++i) {
        outputs.push_back(party_forward(system.parties[i], select_rows(local_train[i], idx), Mode::kTrain));
        codes.push_back(outputs.back().codes);
      }
      const Matrix h = server_aggregate(codes);
      const auto loss = compute_loss(server, h, labels, config.use_consistency);
      ce_sum += loss.ce * static_cast<double>(idx.size());
      cos_sum += loss.cos_term * static_cast<double>(idx.size());

      auto top_params = server.top.parameters();
      adam_step(top_params, loss.top_grads.views(), server.optimizer);

      const auto blocks = split_code_blocks(loss.grad_codes, n_parties, server.code_length);
      for (std::size_t i = 0; i < n_parties; ++i) {
        const auto grads = party_gradients(system.parties[i], outputs[i], blocks[i]);
        apply_party_update(system.parties[i], grads);
      }
    }
    server.trained = true;

    const double n_train = static_cast<double>(train_rows.size());
    EpochRecord train_rec{epoch + 1, "train", 0.0, ce_sum / n_train, cos_sum / n_train, lr};
    train_rec.accuracy = accuracy(predict(system, train_set.features), train_set.labels);
    log.records.push_back(train_rec);
    if (!test_rows.empty()) {
      const auto ev = evaluate(system, test_set.features, test_set.labels, config.use_consistency);
      log.records.push_back({epoch + 1, "test", ev.accuracy, ev.ce, ev.cos_term, lr});
    }
  }
  return log;
}

}  // namespace binvfl
