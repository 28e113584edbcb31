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

// Drives the binvfl executable end to end through std::system.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const fs::path& dir) {
  const auto capture = dir / "stdout.txt";
  const std::string cmd = std::string(BINVFL_CLI) + " " + args + " > " + capture.string() +
                          " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("binvfl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path write_config(const json& j) {
    const auto path = dir_ / "config.json";
    std::ofstream(path) << j.dump(2);
    return path;
  }

  // Small image run that trains in well under a second.
  json image_config() const {
    return {{"seed", 3},
            {"dataset", {{"kind", "images"}, {"classes", 4}, {"n_per_class", 30}, {"side", 8}}},
            {"bottom_hidden", {16}},
            {"top_hidden", 16},
            {"epochs", 3},
            {"batch_size", 32},
            {"attack", {{"steps", 20}, {"samples", 10}, {"probe_epochs", 3}}}};
  }

  std::string common(const fs::path& config) const {
    return "--config " + config.string() + " --out " + (dir_ / "out").string();
  }

  fs::path only_run_dir() const {
    fs::path found;
    for (const auto& e : fs::directory_iterator(dir_ / "out")) {
      if (e.is_directory()) found = e.path();
    }
    return found;
  }

  fs::path dir_;
};

TEST_F(Cli, GenCodesPrintsAndSavesCsv) {
  const auto r = run("gen-codes --classes 10 --code-length 4 --seed 7 --out " + (dir_ / "o").string(), dir_);
  ASSERT_EQ(r.code, 0);
  const auto saved = dir_ / "o" / "codes_c10_d4_s7.csv";
  ASSERT_TRUE(fs::exists(saved));
  EXPECT_EQ(slurp(saved), r.out);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "class,b0,b1,b2,b3");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 10);
  // Same seed, same output.
  EXPECT_EQ(run("gen-codes --classes 10 --code-length 4 --seed 7 --out " + (dir_ / "o").string(), dir_).out,
            r.out);
}

TEST_F(Cli, GenCodesRejectsTooShortCode) {
  EXPECT_NE(run("gen-codes --classes 10 --code-length 3 --out " + (dir_ / "o").string(), dir_).code, 0);
}

TEST_F(Cli, TrainIsReproducible) {
  const auto config = write_config(image_config());
  ASSERT_EQ(run("train " + common(config), dir_).code, 0);
  const auto run_dir = only_run_dir();
  const std::string first = slurp(run_dir / "train_log.csv");
  fs::remove_all(dir_ / "out");
  ASSERT_EQ(run("train " + common(config), dir_).code, 0);
  EXPECT_EQ(slurp(only_run_dir() / "train_log.csv"), first);
  EXPECT_EQ(first.substr(0, first.find('\n')), "epoch,split,accuracy,ce,cos_term,lr");
}

TEST_F(Cli, AttackAndDefenseCommandsWriteReports) {
  const auto config = write_config(image_config());
  ASSERT_EQ(run("train " + common(config), dir_).code, 0);
  const auto reports = only_run_dir() / "reports";
  for (const char* cmd : {"eval", "attack-reconstruct", "attack-pgd", "attack-pla", "detect"}) {
    EXPECT_EQ(run(std::string(cmd) + " " + common(config), dir_).code, 0) << cmd;
  }
  for (const char* name : {"train.json", "eval.json", "reconstruct.json", "pgd.json", "pla.json",
                           "detect.json"}) {
    ASSERT_TRUE(fs::exists(reports / name)) << name;
    const auto j = json::parse(slurp(reports / name));
    EXPECT_TRUE(j.contains("config_hash")) << name;
    EXPECT_EQ(j.at("seed"), 3) << name;
    EXPECT_EQ(j.at("config_hash").get<std::string>(), only_run_dir().filename().string());
  }
  EXPECT_TRUE(fs::exists(reports / "audit_observed.csv"));
  EXPECT_TRUE(fs::exists(reports / "audit_fixed.csv"));

  const std::string pgm = slurp(reports / "reconstruct_class0.pgm");
  EXPECT_EQ(pgm.rfind("P2\n4 8\n255\n", 0), 0u);
  std::istringstream body(pgm.substr(std::string("P2\n4 8\n255\n").size()));
  int v = 0, count = 0;
  while (body >> v) {
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 255);
    ++count;
  }
  EXPECT_EQ(count, 32);  // party 0 holds the left half
  EXPECT_TRUE(fs::exists(reports / "reconstruct_class0_mean.pgm"));
}

TEST_F(Cli, DpSweepWritesOneRowPerEpsilon) {
  const auto config = write_config(image_config());
  ASSERT_EQ(run("train " + common(config), dir_).code, 0);
  const auto r = run("dp-sweep " + common(config) +
                         " --epsilon 1 --epsilon 2 --epsilon 10 --epsilon inf",
                     dir_);
  ASSERT_EQ(r.code, 0);
  const std::string csv = slurp(only_run_dir() / "reports" / "dp_sweep.csv");
  EXPECT_EQ(csv, r.out);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "epsilon,accuracy,accuracy_std,flip_probability,delta,runs");
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].substr(0, 2), "1,");
  EXPECT_EQ(rows[3].substr(0, 4), "inf,");
}

TEST_F(Cli, InvalidConfigExitsTwoWithoutOutput) {
  auto bad = image_config();
  bad["feature_ratios"] = {0.7, 0.7};
  const auto config = write_config(bad);
  const auto r = run("train " + common(config), dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  EXPECT_NE(slurp(dir_ / "stderr.txt").find("feature_ratios"), std::string::npos);
}

TEST_F(Cli, MissingCheckpointIsAnError) {
  const auto config = write_config(image_config());
  const auto r = run("eval " + common(config), dir_);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(slurp(dir_ / "stderr.txt").find("missing checkpoint"), std::string::npos);
}

TEST_F(Cli, CodeLengthMismatchIsAnError) {
  const auto config = write_config(image_config());
  ASSERT_EQ(run("train " + common(config), dir_).code, 0);
  EXPECT_EQ(run("eval " + common(config) + " --code-length 2", dir_).code, 0);
  EXPECT_EQ(run("eval " + common(config) + " --code-length 5", dir_).code, 1);
}

TEST_F(Cli, SeedOverrideChangesRunDirectory) {
  const auto config = write_config(image_config());
  ASSERT_EQ(run("train " + common(config) + " --seed 4", dir_).code, 0);
  const auto j = json::parse(slurp(only_run_dir() / "reports" / "train.json"));
  EXPECT_EQ(j.at("seed"), 4);
}

}  // namespace
