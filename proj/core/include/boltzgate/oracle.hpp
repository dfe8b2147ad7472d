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
#include <vector>

#include "boltzgate/energy.hpp"
#include "boltzgate/random.hpp"
#include "boltzgate/tensor.hpp"

// Exact inference over a single (head, query) gating row by enumerating all
// 2^(S+M) binary states. State k encodes z_s in bit s (little-endian) and
// u_m in bit S+m.
namespace boltzgate::oracle {

inline constexpr std::size_t kMaxEnumerableVariables = 20;

struct TinyInstance {
  std::vector<double> h;  // [S]
  Tensor coupling;        // [S x S], symmetric, zero diagonal
  Tensor w;               // [S x M]
  std::vector<double> b;  // [M]
  double c_lat = 0.5;

  std::size_t edges() const { return h.size(); }
  std::size_t latents() const { return b.size(); }
};

struct ExactPosterior {
  double log_partition = 0.0;
  std::vector<double> probabilities;
  std::vector<double> marginals_z;
  std::vector<double> marginals_u;
};

TinyInstance zero_instance(std::size_t edges, std::size_t latents);

/// Random instance with h, J, W, b uniform in [-scale, scale] and J symmetrised.
TinyInstance random_instance(RandomStream& rng, std::size_t edges, std::size_t latents,
                             double scale, double coupling_scale, double latent_scale,
                             double c_lat = 0.5);

/// Direct energy of one binary configuration.
double state_energy(const TinyInstance& inst, std::uint64_t state);

ExactPosterior enumerate(const TinyInstance& inst);

/// -log Z, the minimum of the variational free energy over all distributions.
double exact_min_free_energy(const TinyInstance& inst);

double exact_gate_probability(const TinyInstance& inst, std::size_t edge);

/// Lowest energy over all states.
double ground_state_energy(const TinyInstance& inst);

/// Lifts an instance to the H=1, T=1 tensors used by the energy and solver modules.
struct LiftedInstance {
  Tensor h;         // [1 x 1 x S]
  Tensor coupling;  // [1 x S x S]
  energy::EnergyParams params;
  energy::KeyMask mask;
};

LiftedInstance lift(const TinyInstance& inst);

}  // namespace boltzgate::oracle
