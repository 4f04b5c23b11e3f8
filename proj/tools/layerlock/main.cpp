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

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "layerlock/experiment/commands.hpp"
#include "layerlock/experiment/config.hpp"

namespace ex = layerlock::experiment;

namespace {

int report_error(const std::string& kind, const std::string& msg, int code) {
  std::string escaped;
  for (char c : msg) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c == '\n' ? ' ' : c;
  }
  std::cerr << "error: kind=" << kind << " msg=\"" << escaped << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layerlock: semi-open deployment experiments on a toy decoder"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t jobs = 1;
  std::string format = "csv";
  std::string input;
  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--seed", seed, "Override the config's base seed");
  app.add_option("--out", out_dir, "Output directory (default: config output_dir, then $LAYERLOCK_OUT)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "What to echo on stdout")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--input", input, "correlate: sweep CSV; report: attack directory");
  const std::map<std::string, std::string> about{
      {"theory-sweep", "collapse vs. secured-layer depth on random bounded stacks"},
      {"theory-adversarial", "non-collapsing construction under random replacements"},
      {"theory-beta", "contraction factor and transition depth per norm budget"},
      {"train-victim", "train the toy decoder on the task mixture"},
      {"dd", "distillation difficulty of every bottom prefix"},
      {"solid-select", "smallest prefix within epsilon of the fully secured DD"},
      {"attack", "distillation attack against each configured strategy"},
      {"customize", "downstream fine-tuning of the open part"},
      {"sweep-placement", "attack a sliding window of secured layers"},
      {"sweep-size", "attack growing prefixes of layers or blocks"},
      {"correlate", "DD vs. distillation ratio correlation"},
      {"report", "markdown table and ordering checks from attack results"}};
  for (const std::string& name : ex::command_names()) {
    const auto it = about.find(name);
    app.add_subcommand(name, it == about.end() ? std::string() : it->second);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 1);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    ex::ExperimentConfig config;
    if (config_path.empty()) {
      if (command != "report") throw ex::CliError(ex::ErrorKind::kUsage, "--config is required");
    } else {
      config = ex::load_config(config_path);
    }
    if (seed) {
      if (command == "report") {
        throw ex::CliError(ex::ErrorKind::kUsage, "--seed has no effect on report");
      }
      config.seed = *seed;
      config.customize.seed = *seed;
    }
    ex::RunOptions opt;
    if (!out_dir.empty()) {
      opt.out_dir = out_dir;
    } else if (!config.output_dir.empty()) {
      opt.out_dir = config.output_dir;
    } else if (const char* env = std::getenv("LAYERLOCK_OUT"); env && *env) {
      opt.out_dir = env;
    } else {
      opt.out_dir = "layerlock-out";
    }
    opt.jobs = jobs;
    opt.format = format == "json" ? ex::Format::kJson : ex::Format::kCsv;
    if (!input.empty()) opt.input = input;
    opt.out = &std::cout;
    opt.log = &std::cerr;
    ex::run_command(command, config, opt);
  } catch (const ex::CliError& e) {
    return report_error(ex::error_kind_name(e.kind()), e.what(), e.exit_code());
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), 2);
  }
  return 0;
}
