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

#include <optional>
#include <string>
#include <string_view>

#include "boltzgate/energy.hpp"
#include "boltzgate/meanfield.hpp"
#include "boltzgate/sampler.hpp"
#include "boltzgate/tape.hpp"

namespace boltzgate::attention {

inline constexpr double kAggregationEps = 1e-6;

enum class AttentionMode { kSoftmax, kBmSoft, kBmHard };

std::string to_string(AttentionMode mode);
/// Accepts "softmax", "bm_soft", "bm_hard".
AttentionMode parse_mode(std::string_view text);
bool is_structured(AttentionMode mode);

/// One layer's projections. Weights are [d_model x d_model], biases [d_model].
struct AttentionWeights {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
  std::optional<energy::EnergyVars> energy;  // present in structured modes
};

struct HeadProjections {
  Var q;  // [H x T x d_h]
  Var k;
  Var v;
};

HeadProjections project_qkv(Var x, const AttentionWeights& w, std::size_t heads);

/// Row softmax of QK^T / sqrt(d_h) with padded keys at kNegMask, applied to V.
/// Throws std::invalid_argument when every key is padded.
Var softmax_attention(Var q, Var k, Var v, const energy::KeyMask& mask);

/// o_ht = sum_s g_hts v_hs / (sum_s g_hts + eps).
Var gated_aggregate(Var gates, Var v, double eps = kAggregationEps);

struct GatingOptions {
  AttentionMode mode = AttentionMode::kBmSoft;
  meanfield::SolverConfig solver;
  /// When set, gates are Gumbel samples of s under this config; otherwise s itself.
  std::optional<sampler::GumbelConfig> gumbel;
  const sampler::GumbelNoise* noise = nullptr;  // required with gumbel
};

struct AttentionOutput {
  Var output;  // [T x d_model] after the output projection
  // Structured modes only:
  Var h;
  Var coupling;
  Var s;  // positive-phase edge probabilities
  Var r;
  Var gates;
  meanfield::SolveTrace trace;
};

/// Full layer: projections, the mode's aggregation, output projection.
AttentionOutput attention_forward(Var x, const AttentionWeights& w, std::size_t heads,
                                  const GatingOptions& opts, const energy::KeyMask& mask);

}  // namespace boltzgate::attention
