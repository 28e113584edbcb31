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

#include "binvfl/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "binvfl/codebook.hpp"

namespace binvfl {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix matrix_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument("checkpoint: " + what + " is not an array");
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
  return Matrix::from_rows(rows);
}

json net_json(const DenseNet& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"activation", l.activation == Activation::kRelu ? "relu" : "identity"},
                      {"weight", matrix_json(l.weight)},
                      {"bias", l.bias}});
  }
  return layers;
}

DenseNet net_from(const json& j, const std::string& what) {
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& l = j.at(i);
    const std::string here = what + ".layers[" + std::to_string(i) + "]";
    DenseLayer layer;
    const auto act = l.at("activation").get<std::string>();
    if (act == "relu") {
      layer.activation = Activation::kRelu;
    } else if (act == "identity") {
      layer.activation = Activation::kIdentity;
    } else {
      throw std::invalid_argument("checkpoint: " + here + " has unknown activation " + act);
    }
    layer.weight = matrix_from(l.at("weight"), here + ".weight");
    layer.bias = l.at("bias").get<std::vector<double>>();
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

}  // namespace

json checkpoint_to_json(const Checkpoint& ck) {
  const auto& sys = ck.system;
  json parties = json::array();
  for (const auto& p : sys.parties) {
    parties.push_back({{"id", p.id},
                       {"feature_columns", p.feature_columns},
                       {"use_bn", p.use_bn},
                       {"bottom", net_json(p.bottom)},
                       {"bn",
                        {{"gamma", p.bn.gamma},
                         {"beta", p.bn.beta},
                         {"running_mean", p.bn.running_mean},
                         {"running_var", p.bn.running_var},
                         {"eps", p.bn.eps},
                         {"momentum", p.bn.momentum},
                         {"batches_seen", p.bn.batches_seen},
                         {"affine_trainable", p.bn.affine_trainable}}}});
  }
  json codes = json::array();
  for (std::size_t c = 0; c < sys.server.codebook.classes; ++c) {
    std::vector<int> row;
    for (double v : sys.server.codebook.code(c)) row.push_back(static_cast<int>(v));
    codes.push_back(row);
  }
  json log = json::array();
  for (const auto& r : ck.log.records) {
    log.push_back({{"epoch", r.epoch},
                   {"split", r.split},
                   {"accuracy", r.accuracy},
                   {"ce", r.ce},
                   {"cos_term", r.cos_term},
                   {"lr", r.lr}});
  }
  return json{{"version", ck.version},
              {"config", config_to_json(ck.config)},
              {"codebook",
               {{"seed", sys.server.codebook.seed},
                {"classes", sys.server.codebook.classes},
                {"code_length", sys.server.codebook.code_length},
                {"codes", codes}}},
              {"parties", parties},
              {"server",
               {{"num_parties", sys.server.num_parties},
                {"code_length", sys.server.code_length},
                {"trained", sys.server.trained},
                {"top", net_json(sys.server.top)}}},
              {"train_log", log}};
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint ck;
  try {
    ck.version = j.at("version").get<int>();
    if (ck.version != kCheckpointVersion) {
      throw std::invalid_argument("checkpoint: unsupported version " + std::to_string(ck.version));
    }
    ck.config = config_from_json(j.at("config"));
    const AdamConfig adam{ck.config.optimizer.lr, 0.9, 0.999, 1e-8, ck.config.optimizer.weight_decay};

    auto& server = ck.system.server;
    const auto& cb = j.at("codebook");
    server.codebook.seed = cb.at("seed").get<std::uint64_t>();
    server.codebook.classes = cb.at("classes").get<std::size_t>();
    server.codebook.code_length = cb.at("code_length").get<std::size_t>();
    std::vector<std::vector<double>> rows;
    for (const auto& r : cb.at("codes")) {
      std::vector<double> row;
      for (const auto& v : r) row.push_back(static_cast<double>(v.get<int>()));
      rows.push_back(std::move(row));
    }
    server.codebook.codes = Matrix::from_rows(rows);
    server.codebook.validate();

    const auto& sj = j.at("server");
    server.num_parties = sj.at("num_parties").get<std::size_t>();
    server.code_length = sj.at("code_length").get<std::size_t>();
    server.trained = sj.at("trained").get<bool>();
    server.top = net_from(sj.at("top"), "server.top");
    server.optimizer = make_adam(server.top.parameters(), adam);
    server.validate();

    const auto& parties = j.at("parties");
    for (std::size_t i = 0; i < parties.size(); ++i) {
      const auto& pj = parties.at(i);
      PartyState p;
      p.id = pj.at("id").get<std::size_t>();
      p.feature_columns = pj.at("feature_columns").get<std::vector<std::size_t>>();
      p.use_bn = pj.at("use_bn").get<bool>();
      p.bottom = net_from(pj.at("bottom"), "parties[" + std::to_string(i) + "].bottom");
      const auto& bn = pj.at("bn");
      p.bn.gamma = bn.at("gamma").get<std::vector<double>>();
      p.bn.beta = bn.at("beta").get<std::vector<double>>();
      p.bn.running_mean = bn.at("running_mean").get<std::vector<double>>();
      p.bn.running_var = bn.at("running_var").get<std::vector<double>>();
      p.bn.eps = bn.at("eps").get<double>();
      p.bn.momentum = bn.at("momentum").get<double>();
      p.bn.batches_seen = bn.at("batches_seen").get<std::uint64_t>();
      p.bn.affine_trainable = bn.at("affine_trainable").get<bool>();
      p.optimizer = make_adam(p.parameters(), adam);
      p.validate();
      ck.system.parties.push_back(std::move(p));
    }
    if (ck.system.parties.size() != server.num_parties) {
      throw std::invalid_argument("checkpoint: party count does not match server");
    }

    for (const auto& r : j.at("train_log")) {
      ck.log.records.push_back({r.at("epoch").get<int>(), r.at("split").get<std::string>(),
                                r.at("accuracy").get<double>(), r.at("ce").get<double>(),
                                r.at("cos_term").get<double>(), r.at("lr").get<double>()});
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: malformed: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << checkpoint_to_json(checkpoint).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing checkpoint " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("checkpoint: not JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace binvfl
