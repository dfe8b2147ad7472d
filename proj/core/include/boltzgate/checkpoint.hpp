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

#include <filesystem>
#include <string>

#include "boltzgate/model.hpp"
#include "boltzgate/params.hpp"

namespace boltzgate::checkpoint {

inline constexpr int kFormatVersion = 1;

struct Checkpoint {
  model::ModelConfig config;
  ParameterSet params;
};

/// Model configuration as a JSON object string (compact).
std::string config_to_json(const model::ModelConfig& cfg);
model::ModelConfig config_from_json(const std::string& text);

/// Writes a JSON document {format, format_version, config, parameters}.
void save(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Reads a checkpoint written by save(). Rejects unknown versions, missing
/// parameters and shape disagreements with the stored config.
Checkpoint load(const std::filesystem::path& path);

}  // namespace boltzgate::checkpoint
