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
#include <ostream>
#include <vector>

#include "boltzgate/data.hpp"
#include "boltzgate_cli/run_config.hpp"

namespace boltzgate::cli {

/// Reads a TSV file, or generates the synthetic task when `source` is "synth".
std::vector<data::SequenceRecord> load_dataset(const std::string& source, const RunConfig& cfg,
                                               const char* flag);

/// Trains, writing metrics.jsonl, best.ckpt.json, last.ckpt.json and
/// run_config.json under cfg.out. Returns the process exit code.
int cmd_train(const RunConfig& cfg, std::ostream& log);

/// Accuracy and loss of cfg.checkpoint on cfg.data; also written to
/// cfg.out/eval.json when cfg.out is set.
int cmd_eval(const RunConfig& cfg, std::ostream& log);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  attention::AttentionMode mode = attention::AttentionMode::kBmSoft;
  bool inject_error = false;  // negative control
};
int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& log);

struct OracleVerifyOptions {
  std::uint64_t seed = 0;
  bool inject_violation = false;  // negative control
};
int cmd_oracle_verify(const OracleVerifyOptions& opts, std::ostream& log);

int cmd_inspect(const RunConfig& cfg, std::ostream& log);

int cmd_synth(const data::SynthSpec& spec, std::size_t n, const std::filesystem::path& path,
              std::ostream& log);

}  // namespace boltzgate::cli
