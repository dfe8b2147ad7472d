// Copyright 2026 The BoltzGate Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "boltzgate/inspect.hpp"
#include "boltzgate/model.hpp"
#include "boltzgate/training.hpp"

namespace boltzgate::cli {

/// Invalid or incomplete run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string data;  // TSV path or "synth"
  std::string val;   // optional; otherwise a seeded split of `data`
  std::string out = "run";
  std::string checkpoint;
  std::uint64_t seed = 0;
  bool seed_from_file = false;
  std::size_t threads = 1;
  double val_fraction = 0.1;
  std::size_t synth_samples = 2000;
  double synth_noise = 0.05;
  model::ModelConfig model;
  training::TrainConfig train;
  inspect::InspectOptions inspect;

  /// Pushes seed and thread count into the nested configs and validates them.
  void finalize();
};

/// Defaults with the number of hardware threads.
RunConfig default_run_config();

/// Overlays the keys of a JSON document on `base`. Unknown keys throw ConfigError.
RunConfig parse_run_config(const std::string& json_text, RunConfig base);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base);
std::string serialize_run_config(const RunConfig& cfg);

/// Command-line values; unset ones leave the config untouched.
struct Overrides {
  std::optional<std::string> data, val, out, checkpoint, mode, neg;
  std::optional<int> epochs;
  std::optional<std::size_t> batch, threads, kernel, stride;
  std::optional<int> mf_iters;
  std::optional<double> lr, margin, lambda_max, rho;
  std::optional<std::uint64_t> seed;
};

/// Seed precedence: --seed, then the config file, then BOLTZGATE_SEED, then 0.
void apply_overrides(RunConfig& cfg, const Overrides& o);

}  // namespace boltzgate::cli
