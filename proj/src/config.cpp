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

#include "binvfl/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

#include "binvfl/codebook.hpp"

namespace binvfl {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& known) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(join(path, key), "unknown field");
  }
}

template <typename T>
T convert(const json& v, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
    return v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) return v.get<T>();
      if (v.get<std::int64_t>() < 0) throw ConfigError(path, "must be non-negative");
    }
    return v.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<T>::infinity();
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<T>();
  } else {
    static_assert(sizeof(T) == 0, "unsupported config type");
  }
}

template <typename T>
void read(const json& obj, const std::string& path, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  out = convert<T>(*it, join(path, key));
}

template <typename T>
void read(const json& obj, const std::string& path, const char* key, std::vector<T>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string here = join(path, key);
  if (!it->is_array()) throw ConfigError(here, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < it->size(); ++i) {
    out.push_back(convert<T>((*it)[i], here + "[" + std::to_string(i) + "]"));
  }
}

json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

void check(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

}  // namespace

std::vector<double> ExperimentConfig::ratios() const {
  if (!feature_ratios.empty()) return feature_ratios;
  return std::vector<double>(parties, 1.0 / static_cast<double>(parties));
}

std::size_t ExperimentConfig::effective_code_length(std::size_t classes) const {
  return code_length != 0 ? code_length : binvfl::code_length(classes);
}

void ExperimentConfig::validate() const {
  const auto& ds = dataset;
  check(ds.kind == "blobs" || ds.kind == "images" || ds.kind == "csv", "dataset.kind",
        "must be one of blobs, images, csv");
  if (ds.kind == "csv") {
    check(!ds.path.empty(), "dataset.path", "required for csv datasets");
    check(!ds.label_column.empty(), "dataset.label_column", "must not be empty");
  } else {
    check(ds.classes >= 2, "dataset.classes", "must be >= 2");
    check(ds.n_per_class >= 1, "dataset.n_per_class", "must be >= 1");
  }
  if (ds.kind == "blobs") {
    check(ds.dim >= parties, "dataset.dim", "must be >= parties");
    check(ds.separation > 0.0, "dataset.separation", "must be > 0");
    check(std::isfinite(ds.offset), "dataset.offset", "must be finite");
  }
  if (ds.kind == "images") {
    check(ds.side >= 8, "dataset.side", "must be >= 8");
    check(ds.side >= parties, "dataset.side", "must be >= parties");
    check(ds.noise >= 0.0, "dataset.noise", "must be >= 0");
  }

  check(parties >= 1, "parties", "must be >= 1");
  if (!feature_ratios.empty()) {
    check(feature_ratios.size() == parties, "feature_ratios",
          "has " + std::to_string(feature_ratios.size()) + " entries for " +
              std::to_string(parties) + " parties");
    double sum = 0.0;
    for (std::size_t i = 0; i < feature_ratios.size(); ++i) {
      check(feature_ratios[i] > 0.0 && std::isfinite(feature_ratios[i]),
            "feature_ratios[" + std::to_string(i) + "]", "must be positive");
      sum += feature_ratios[i];
    }
    check(std::abs(sum - 1.0) <= 1e-6, "feature_ratios", "must sum to 1");
  }
  if (ds.kind != "csv") {
    check(effective_code_length(ds.classes) >= binvfl::code_length(ds.classes), "code_length",
          "must be >= ceil(log2(classes)) = " + std::to_string(binvfl::code_length(ds.classes)));
  }
  check(code_length <= 62, "code_length", "must be <= 62");
  for (std::size_t i = 0; i < bottom_hidden.size(); ++i) {
    check(bottom_hidden[i] > 0, "bottom_hidden[" + std::to_string(i) + "]", "must be > 0");
  }
  check(top_hidden > 0, "top_hidden", "must be > 0");
  check(epochs >= 1, "epochs", "must be >= 1");
  check(batch_size >= 2, "batch_size", "must be >= 2");

  check(optimizer.lr > 0.0, "optimizer.lr", "must be > 0");
  check(optimizer.weight_decay >= 0.0, "optimizer.weight_decay", "must be >= 0");
  check(optimizer.decay_every >= 1, "optimizer.decay_every", "must be >= 1");
  check(optimizer.decay_factor > 0.0 && optimizer.decay_factor <= 1.0, "optimizer.decay_factor",
        "must be in (0, 1]");
  check(train_ratio > 0.0 && train_ratio < 1.0, "train_ratio", "must be in (0, 1)");

  check(attack.party < parties, "attack.party", "must name an existing party");
  check(attack.lambda >= 0.0, "attack.lambda", "must be >= 0");
  check(attack.steps >= 1, "attack.steps", "must be >= 1");
  check(attack.lr > 0.0, "attack.lr", "must be > 0");
  check(attack.omega > 0.0, "attack.omega", "must be > 0");
  check(attack.eta > 0.0, "attack.eta", "must be > 0");
  check(attack.pgd_steps >= 1, "attack.pgd_steps", "must be >= 1");
  check(attack.target_class >= 0, "attack.target_class", "must be >= 0");
  if (ds.kind != "csv") {
    check(static_cast<std::size_t>(attack.target_class) < ds.classes, "attack.target_class",
          "must be < dataset.classes");
  }
  check(attack.samples >= 1, "attack.samples", "must be >= 1");
  check(attack.probe_epochs >= 1, "attack.probe_epochs", "must be >= 1");

  for (std::size_t i = 0; i < defense.epsilons.size(); ++i) {
    check(defense.epsilons[i] > 0.0, "defense.epsilons[" + std::to_string(i) + "]",
          "must be > 0");
  }
  check(defense.runs >= 1, "defense.runs", "must be >= 1");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  require_object(j, "");
  reject_unknown(j, "", {"seed", "dataset", "parties", "feature_ratios", "code_length",
                         "bottom_hidden", "top_hidden", "epochs", "batch_size", "optimizer",
                         "train_ratio", "oversample", "use_bn", "use_consistency",
                         "train_bn_affine", "attack", "defense"});
  read(j, "", "seed", c.seed);
  read(j, "", "parties", c.parties);
  read(j, "", "feature_ratios", c.feature_ratios);
  read(j, "", "code_length", c.code_length);
  read(j, "", "bottom_hidden", c.bottom_hidden);
  read(j, "", "top_hidden", c.top_hidden);
  read(j, "", "epochs", c.epochs);
  read(j, "", "batch_size", c.batch_size);
  read(j, "", "train_ratio", c.train_ratio);
  read(j, "", "oversample", c.oversample);
  read(j, "", "use_bn", c.use_bn);
  read(j, "", "use_consistency", c.use_consistency);
  read(j, "", "train_bn_affine", c.train_bn_affine);

  if (auto it = j.find("dataset"); it != j.end()) {
    const std::string p = "dataset";
    require_object(*it, p);
    reject_unknown(*it, p, {"kind", "classes", "n_per_class", "dim", "separation", "offset", "side", "noise",
                            "path", "label_column", "drop_columns"});
    auto& d = c.dataset;
    read(*it, p, "kind", d.kind);
    read(*it, p, "classes", d.classes);
    read(*it, p, "n_per_class", d.n_per_class);
    read(*it, p, "dim", d.dim);
    read(*it, p, "separation", d.separation);
    read(*it, p, "offset", d.offset);
    read(*it, p, "side", d.side);
    read(*it, p, "noise", d.noise);
    read(*it, p, "path", d.path);
    read(*it, p, "label_column", d.label_column);
    read(*it, p, "drop_columns", d.drop_columns);
  }
  if (auto it = j.find("optimizer"); it != j.end()) {
    const std::string p = "optimizer";
    require_object(*it, p);
    reject_unknown(*it, p, {"lr", "weight_decay", "decay_every", "decay_factor"});
    read(*it, p, "lr", c.optimizer.lr);
    read(*it, p, "weight_decay", c.optimizer.weight_decay);
    read(*it, p, "decay_every", c.optimizer.decay_every);
    read(*it, p, "decay_factor", c.optimizer.decay_factor);
  }
  if (auto it = j.find("attack"); it != j.end()) {
    const std::string p = "attack";
    require_object(*it, p);
    reject_unknown(*it, p, {"party", "lambda", "steps", "lr", "omega", "eta", "pgd_steps",
                            "target_class", "samples", "probe_hidden", "probe_epochs"});
    auto& a = c.attack;
    read(*it, p, "party", a.party);
    read(*it, p, "lambda", a.lambda);
    read(*it, p, "steps", a.steps);
    read(*it, p, "lr", a.lr);
    read(*it, p, "omega", a.omega);
    read(*it, p, "eta", a.eta);
    read(*it, p, "pgd_steps", a.pgd_steps);
    read(*it, p, "target_class", a.target_class);
    read(*it, p, "samples", a.samples);
    read(*it, p, "probe_hidden", a.probe_hidden);
    read(*it, p, "probe_epochs", a.probe_epochs);
  }
  if (auto it = j.find("defense"); it != j.end()) {
    const std::string p = "defense";
    require_object(*it, p);
    reject_unknown(*it, p, {"epsilons", "runs"});
    read(*it, p, "epsilons", c.defense.epsilons);
    read(*it, p, "runs", c.defense.runs);
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json eps = json::array();
  for (double e : c.defense.epsilons) eps.push_back(number_or_inf(e));
  return json{
      {"seed", c.seed},
      {"dataset",
       {{"kind", c.dataset.kind},
        {"classes", c.dataset.classes},
        {"n_per_class", c.dataset.n_per_class},
        {"dim", c.dataset.dim},
        {"separation", c.dataset.separation},
        {"offset", c.dataset.offset},
        {"side", c.dataset.side},
        {"noise", c.dataset.noise},
        {"path", c.dataset.path},
        {"label_column", c.dataset.label_column},
        {"drop_columns", c.dataset.drop_columns}}},
      {"parties", c.parties},
      {"feature_ratios", c.feature_ratios},
      {"code_length", c.code_length},
      {"bottom_hidden", c.bottom_hidden},
      {"top_hidden", c.top_hidden},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"weight_decay", c.optimizer.weight_decay},
        {"decay_every", c.optimizer.decay_every},
        {"decay_factor", c.optimizer.decay_factor}}},
      {"train_ratio", c.train_ratio},
      {"oversample", c.oversample},
      {"use_bn", c.use_bn},
      {"use_consistency", c.use_consistency},
      {"train_bn_affine", c.train_bn_affine},
      {"attack",
       {{"party", c.attack.party},
        {"lambda", c.attack.lambda},
        {"steps", c.attack.steps},
        {"lr", c.attack.lr},
        {"omega", c.attack.omega},
        {"eta", c.attack.eta},
        {"pgd_steps", c.attack.pgd_steps},
        {"target_class", c.attack.target_class},
        {"samples", c.attack.samples},
        {"probe_hidden", c.attack.probe_hidden},
        {"probe_epochs", c.attack.probe_epochs}}},
      {"defense", {{"epsilons", eps}, {"runs", c.defense.runs}}},
  };
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string canonical = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace binvfl
