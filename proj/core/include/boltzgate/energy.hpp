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

#include <vector>

#include "boltzgate/tape.hpp"
#include "boltzgate/tensor.hpp"

// Boltzmann energy over gating graphs z [H x T x S] and latent units
// u [H x T x M]:
//
//   E(z, u) = -sum h z  -  1/2 sum_{s != s'} J_ss' z_s z_s'
//             - c_lat * ( sum b u + sum_s,m W_sm z_s u_m )
//
// Under a factorised Bernoulli q with means (s, r), E_q[E] is E evaluated at
// (s, r) because J has a zero diagonal, so the same routines serve both.
namespace boltzgate::energy {

/// Per-key validity: 1 for a real key, 0 for padding.
using KeyMask = std::vector<double>;

KeyMask all_valid(std::size_t keys);

/// Learnable energy parameters of one attention layer.
struct EnergyParams {
  Tensor w_diag;  // [H x d_h]   diagonal of the symmetric key-key form
  Tensor w_lat;   // [H x S x M] latent couplings indexed by key position
  Tensor b_lat;   // [H x M]     latent biases
  double c_lat = 0.5;

  std::size_t heads() const { return b_lat.dim(0); }
  std::size_t latents() const { return b_lat.dim(1); }
};

EnergyParams make_energy_params(std::size_t heads, std::size_t head_dim, std::size_t keys,
                                std::size_t latents, double c_lat = 0.5);

/// The same parameters as tape values.
struct EnergyVars {
  Var w_diag;
  Var w_lat;
  Var b_lat;
  Var c_lat;  // scalar
};

/// Registers `params` on `tape`; `trainable` selects variable vs constant leaves.
EnergyVars bind(Tape& tape, const EnergyParams& params, bool trainable = false);

/// Mean-field parameters: s [H x T x S] edge probabilities, r [H x T x M] latent means.
struct StructureState {
  Tensor s;
  Tensor r;
};

/// h_hts = q_ht . k_hs / sqrt(d_h); padded keys get kNegMask.
Var bias_field(Var queries, Var keys, const KeyMask& mask);
Tensor bias_field(const Tensor& queries, const Tensor& keys, const KeyMask& mask);

/// J_ss' = (1/d_h) sum_d w_diag[d] k_s[d] k_s'[d] off the diagonal, zero on it and on
/// padded rows/columns. Exactly symmetric.
Var pair_coupling(Var keys, Var w_diag, const KeyMask& mask);
Tensor pair_coupling(const Tensor& keys, const Tensor& w_diag, const KeyMask& mask);

/// Throws std::invalid_argument("coupling must be symmetric") unless J[h] == J[h]^T.
void require_symmetric(const Tensor& coupling);

Var energy_bias(Var h, Var z);
Var energy_pair(Var coupling, Var z);
Var energy_latent(const EnergyVars& params, Var z, Var u);
Var total_energy(Var h, Var coupling, const EnergyVars& params, Var z, Var u);

double energy_bias(const Tensor& h, const Tensor& z);
double energy_pair(const Tensor& coupling, const Tensor& z);
double energy_latent(const EnergyParams& params, const Tensor& z, const Tensor& u);
double total_energy(const Tensor& h, const Tensor& coupling, const EnergyParams& params,
                    const Tensor& z, const Tensor& u);

/// E_q[E] for factorised q; identical to total_energy at (s, r).
double expected_energy(const Tensor& h, const Tensor& coupling, const EnergyParams& params,
                       const StructureState& q);

/// Sum of Bernoulli entropies of unmasked s entries and all r entries,
/// each clamped to [kProbEps, 1 - kProbEps].
double entropy(const StructureState& q, const KeyMask& mask);

/// Variational free energy E_q[E] - H(q).
double free_energy(const Tensor& h, const Tensor& coupling, const EnergyParams& params,
                   const StructureState& q, const KeyMask& mask);

}  // namespace boltzgate::energy
