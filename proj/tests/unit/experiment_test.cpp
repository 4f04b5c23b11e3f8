// Copyright 2026 The LayerLock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "layerlock/experiment/commands.hpp"
#include "layerlock/experiment/config.hpp"
#include "layerlock/experiment/report.hpp"

namespace {

using namespace layerlock;
using namespace layerlock::experiment;
using nlohmann::json;
namespace fs = std::filesystem;

ErrorKind error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const CliError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no CliError";
  return ErrorKind::kRuntime;
}

json tiny_theory() {
  return json::parse(R"({
    "seed": 3,
    "theory": {"n": 4, "d": 6, "d_q": 2, "layers": 8, "alphas": [0.25, 0.5],
               "seed_count": 2, "max_layers": 256,
               "beta": {"restarts": 2, "ascent_steps": 10, "budgets": [0.5]},
               "adversarial": {"norm_budget": 2.0, "replacements": 2}}
  })");
}

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("layerlock_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Config, UnknownKeysRejected) {
  auto j = tiny_theory();
  j["theory"]["layer"] = 4;
  EXPECT_EQ(error_of([&] { parse_config(j); }), ErrorKind::kConfig);
  EXPECT_EQ(error_of([&] { parse_config(json{{"modle", json::object()}}); }), ErrorKind::kConfig);
  EXPECT_EQ(error_of([&] { parse_config(json{{"seed", "one"}}); }), ErrorKind::kConfig);
}

TEST(Config, HashIgnoresOutputDir) {
  auto j = tiny_theory();
  const auto a = parse_config(j);
  j["output_dir"] = "/somewhere/else";
  const auto b = parse_config(j);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  j["seed"] = 4;
  EXPECT_NE(parse_config(j).hash(), a.hash());
}

TEST(Config, SectionsAreTracked) {
  const auto c = parse_config(tiny_theory());
  EXPECT_TRUE(c.has("theory"));
  EXPECT_FALSE(c.has("attack"));
  EXPECT_EQ(error_of([&] { c.require({"model", "attack"}); }), ErrorKind::kConfig);
}

TEST(Config, StrategiesRoundTrip) {
  using harness::DeploymentStrategy;
  for (const auto& s : {DeploymentStrategy::solid(3), DeploymentStrategy::darknetz(),
                        DeploymentStrategy::sap(2), DeploymentStrategy::sap_dp(0.25),
                        DeploymentStrategy::fully_secured(),
                        DeploymentStrategy::of(toymodel::SecuredSet::of_layers({2, 4}, 6))}) {
    const auto back = strategy_from_json(strategy_to_json(s));
    EXPECT_EQ(back.label(), s.label());
    EXPECT_EQ(strategy_to_json(back), strategy_to_json(s));
  }
  EXPECT_EQ(strategy_from_json("darknetz").kind, harness::StrategyKind::kDarkneTZ);
}

TEST(Config, ErrorKindsMapToExitCodes) {
  EXPECT_EQ(CliError(ErrorKind::kUsage, "").exit_code(), 1);
  EXPECT_EQ(CliError(ErrorKind::kConfig, "").exit_code(), 1);
  EXPECT_EQ(CliError(ErrorKind::kCheckpoint, "").exit_code(), 2);
  EXPECT_EQ(CliError(ErrorKind::kIo, "").exit_code(), 2);
}

TEST(Commands, TheoryRerunsAreByteIdentical) {
  const auto cfg = parse_config(tiny_theory());
  for (const std::string cmd : {"theory-sweep", "theory-beta", "theory-adversarial"}) {
    std::string first;
    for (int run = 0; run < 2; ++run) {
      const auto dir = fresh_dir("rerun" + std::to_string(run));
      std::ostringstream out;
      run_command(cmd, cfg, {.out_dir = dir, .jobs = run + 1u, .out = &out});
      std::string file = cmd + ".csv";
      file[6] = '_';
      const auto csv = slurp(dir / cmd / file);
      EXPECT_EQ(csv.rfind("# layerlock " + cmd + " config_hash=" + cfg.hash(), 0), 0u);
      EXPECT_TRUE(fs::exists(dir / cmd / "run_manifest.json"));
      if (run == 0) first = csv;
      else EXPECT_EQ(csv, first) << cmd;
    }
  }
}

TEST(Commands, MissingSectionsAndStrayInput) {
  const auto cfg = parse_config(tiny_theory());
  const auto dir = fresh_dir("missing");
  EXPECT_EQ(error_of([&] { run_command("dd", cfg, {.out_dir = dir}); }), ErrorKind::kConfig);
  EXPECT_EQ(error_of([&] {
              run_command("theory-sweep", cfg, {.out_dir = dir, .input = dir});
            }),
            ErrorKind::kUsage);
  EXPECT_EQ(error_of([&] { run_command("nope", cfg, {.out_dir = dir}); }), ErrorKind::kUsage);
}

TEST(Commands, SweepCsvIsReadBack) {
  const auto dir = fresh_dir("sweepcsv");
  std::ofstream(dir / "s.csv") << "# layerlock sweep-size config_hash=00ff\n"
                                  "size,secured,dd,adr,ratio_a,ratio_b,customization\n"
                                  "1,\"{1}\",2.5,0.5,0.4,nan,\n"
                                  "2,\"{1,2}\",3.5,0.25,0.2,0.3,\n";
  const auto cols = read_sweep_csv(dir / "s.csv");
  EXPECT_EQ(cols.config_hash, "00ff");
  EXPECT_EQ(cols.benchmarks, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(cols.dd, (std::vector<double>{2.5, 3.5}));
  EXPECT_EQ(cols.adr, (std::vector<double>{0.5, 0.25}));
  EXPECT_TRUE(std::isnan(cols.ratios[1][0]));
  std::ofstream(dir / "bad.csv") << "size,dd\n";
  EXPECT_EQ(error_of([&] { read_sweep_csv(dir / "bad.csv"); }), ErrorKind::kIo);
}

json fake_attack(const std::string& hash, double solid, double dark, double full) {
  auto rep = [](const std::string& kind, double adr) {
    return json{{"kind", kind}, {"secured_label", "{1}"}, {"adr", adr}, {"delta_adr", nullptr},
                {"benchmarks", json::array({{{"name", "m"}, {"ratio", adr}, {"excluded", false}}})}};
  };
  return {{"command", "attack"},
          {"config_hash", hash},
          {"victim", {{"mixture_accuracy", 0.95}}},
          {"reports", json::array({rep("solid", solid), rep("darknetz", dark),
                                   rep("fully-secured", full)})}};
}

TEST(Commands, ReportRefusesMixedHashes) {
  const auto dir = fresh_dir("report");
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  std::ofstream(dir / "a" / "attack.json") << fake_attack("aaaa", 0.2, 0.6, 0.15);
  std::ofstream(dir / "b" / "attack.json") << fake_attack("bbbb", 0.2, 0.6, 0.15);
  EXPECT_EQ(error_of([&] {
              run_command("report", ExperimentConfig{}, {.out_dir = dir, .input = dir});
            }),
            ErrorKind::kRuntime);
  fs::remove_all(dir / "b");
  std::ostringstream out;
  run_command("report", ExperimentConfig{}, {.out_dir = dir, .input = dir / "a", .out = &out});
  const auto md = slurp(dir / "report" / "report.md");
  EXPECT_NE(md.find("| m | 20.0 | 60.0 | 15.0 |"), std::string::npos) << md;
  EXPECT_EQ(md.find("DEVIATION"), std::string::npos);
}

TEST(Report, OrderingFlagCarriesCaveat) {
  const auto j = fake_attack("x", 0.5, 0.55, 0.2);
  std::vector<json> reps(j["reports"].begin(), j["reports"].end());
  const auto oc = check_ordering(reps, 0.95);
  EXPECT_FALSE(oc.all_passed());
  EXPECT_EQ(oc.flag().rfind("DEVIATION:", 0), 0u);
  EXPECT_NE(oc.flag().find(kSmallModelCaveat), std::string::npos);
  const auto ok = fake_attack("x", 0.2, 0.4, 0.15);
  std::vector<json> good(ok["reports"].begin(), ok["reports"].end());
  EXPECT_TRUE(check_ordering(good, 0.95).all_passed());
  EXPECT_FALSE(check_ordering(good, 0.5).all_passed());
}

}  // namespace
