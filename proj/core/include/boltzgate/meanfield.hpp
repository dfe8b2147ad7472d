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

#include <functional>
#include <vector>

#include "boltzgate/energy.hpp"
#include "boltzgate/tape.hpp"

namespace boltzgate::meanfield {

enum class UpdateMode { kParallel, kSequential };

struct SolverConfig {
  int iterations = 3;     // K sweeps; the cap when early_exit is set
  double damping = 0.5;   // parallel mode only
  double tolerance = 1e-8;
  UpdateMode mode = UpdateMode::kParallel;
  bool early_exit = false;  // diagnostic mode: stop once residual <= tolerance
  bool trace_free_energy = true;  // fill SolveTrace::free_energy_per_sweep

  void validate() const;
};

struct SolveTrace {
  double residual = 0.0;  // max |target - s| of the last sweep, before damping
  int sweeps = 0;
  std::vector<double> free_energy_per_sweep;
};

/// s0 = sigmoid(h), clamped, padded keys set to 0.
Var init_s(Var h, const energy::KeyMask& mask);

/// r = sigmoid(c_lat * (b + W^T s)), clamped.
Var update_r(Var s, const energy::EnergyVars& params);

/// One parallel sweep of the edge update
///   s <- damping * s + (1 - damping) * sigmoid(h + J s + c_lat * W r).
Var update_s(Var s_prev, Var r, Var h, Var coupling, const energy::EnergyVars& params,
             double damping, const energy::KeyMask& mask);

struct SolveResult {
  Var s;
  Var r;
  SolveTrace trace;
};

/// Differentiable parallel solve with a fixed number of sweeps (unrolled on the tape).
SolveResult solve(Var h, Var coupling, const energy::EnergyVars& params, const SolverConfig& cfg,
                  const energy::KeyMask& mask);

struct Solution {
  energy::StructureState state;
  SolveTrace trace;
};

/// Called with the free energy after every coordinate (sequential) or sweep (parallel).
using FreeEnergyObserver = std::function<void(double)>;

/// Value-only solve supporting both update modes and early exit.
Solution solve(const Tensor& h, const Tensor& coupling, const energy::EnergyParams& params,
               const SolverConfig& cfg, const energy::KeyMask& mask,
               const FreeEnergyObserver& observer = {});

/// max |sigmoid(field(s, r)) - s| over unmasked entries, with r = update_r(s).
double fixed_point_residual(const Tensor& h, const Tensor& coupling,
                            const energy::EnergyParams& params, const Tensor& s,
                            const energy::KeyMask& mask);

}  // namespace boltzgate::meanfield
