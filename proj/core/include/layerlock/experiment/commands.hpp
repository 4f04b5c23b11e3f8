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

#ifndef LAYERLOCK_EXPERIMENT_COMMANDS_HPP_
#define LAYERLOCK_EXPERIMENT_COMMANDS_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/experiment/config.hpp"

namespace layerlock::experiment {

inline constexpr const char* kVersion = "0.1.0";

enum class Format { kCsv, kJson };

struct RunOptions {
  std::filesystem::path out_dir;  // artifacts go to out_dir/<command>/
  std::size_t jobs = 1;
  Format format = Format::kCsv;   // what is echoed to `out`
  std::optional<std::filesystem::path> input;  // correlate (sweep CSV), report (attack dir)
  std::ostream* out = nullptr;
  std::ostream* log = nullptr;
};

const std::vector<std::string>& command_names();
bool takes_input(const std::string& command);

// Runs one subcommand. Throws CliError on any failure.
void run_command(const std::string& command, const ExperimentConfig& config,
                 const RunOptions& options);

// Collects artifacts of one command: every CSV starts with a comment line
// naming the command and config hash, every JSON carries both as fields, and
// finish() writes run_manifest.json listing each file's FNV-1a hash.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, std::string command, std::string config_hash);

  const std::filesystem::path& dir() const { return dir_; }
  std::string csv_preamble() const;
  void csv(const std::string& name, const std::string& body);
  void json(const std::string& name, nlohmann::json body);
  void text(const std::string& name, const std::string& body);
  void binary(const std::string& name, const std::vector<unsigned char>& bytes);
  void finish(const nlohmann::json& config, const nlohmann::json& seeds,
              const nlohmann::json& extra = nlohmann::json::object());

 private:
  void record(const std::string& name, const std::string& bytes);

  std::filesystem::path dir_;
  std::string command_;
  std::string hash_;
  std::vector<std::pair<std::string, std::string>> files_;  // (name, fnv hex)
};

// Parses a sweep CSV written by sweep-placement or sweep-size back into
// (dd, adr, per-benchmark ratio) columns for correlation.
struct SweepColumns {
  std::string config_hash;
  std::vector<std::string> benchmarks;
  std::vector<double> dd;
  std::vector<double> adr;
  std::vector<std::vector<double>> ratios;  // [benchmark][row]
};
SweepColumns read_sweep_csv(const std::filesystem::path& path);

}  // namespace layerlock::experiment

#endif  // LAYERLOCK_EXPERIMENT_COMMANDS_HPP_
