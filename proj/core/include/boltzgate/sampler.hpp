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

#include <utility>

#include "boltzgate/energy.hpp"
#include "boltzgate/random.hpp"
#include "boltzgate/tape.hpp"

namespace boltzgate::sampler {

struct GumbelConfig {
  double tau = 1.0;
  bool hard = false;  // straight-through: hard forward, soft backward

  void validate() const;
};

/// Per-entry noise for class 0 and class 1, sampled once per forward pass.
struct GumbelNoise {
  Tensor g0;
  Tensor g1;
};

GumbelNoise draw_noise(const Shape& shape, RandomStream& rng);
GumbelNoise zero_noise(const Shape& shape);

/// (alpha0, alpha1) = (log(1 - s), log(s)) on clamped s.
std::pair<Tensor, Tensor> gate_logits(const Tensor& s);

/// Class-1 component of softmax((alpha + g) / tau) over the two classes.
/// Padded keys stay exactly 0.
Var gumbel_soft_sample(Var s, const GumbelConfig& cfg, const GumbelNoise& noise,
                       const energy::KeyMask& mask);

/// Forward value is the hard argmax (ties go to class 1); the gradient is
/// that of gumbel_soft_sample.
Var gumbel_hard_sample(Var s, const GumbelConfig& cfg, const GumbelNoise& noise,
                       const energy::KeyMask& mask);

/// Dispatches on cfg.hard.
Var gumbel_sample(Var s, const GumbelConfig& cfg, const GumbelNoise& noise,
                  const energy::KeyMask& mask);

Tensor gumbel_soft_sample(const Tensor& s, const GumbelConfig& cfg, const GumbelNoise& noise,
                          const energy::KeyMask& mask);
Tensor gumbel_hard_sample(const Tensor& s, const GumbelConfig& cfg, const GumbelNoise& noise,
                          const energy::KeyMask& mask);

enum class NegativeMode { kPerturb, kAnneal };

struct AnnealConfig {
  int sweeps = 200;
  double t_start = 2.0;
  double t_end = 0.01;
};

struct NegativeSamplerConfig {
  double flip_fraction = 0.1;
  NegativeMode mode = NegativeMode::kPerturb;
  AnnealConfig anneal;

  void validate() const;
};

/// Number of edges perturb_negative flips out of `edges` unmasked ones.
std::size_t flip_count(double flip_fraction, std::size_t edges);

/// Binarises s at 0.5, flips a uniformly chosen ceil(rho * E) subset of the
/// unmasked edges, and returns the result clamped to {eps, 1 - eps}.
/// r is carried over unchanged. Throws if no edge is unmasked.
energy::StructureState perturb_negative(const energy::StructureState& positive,
                                        const NegativeSamplerConfig& cfg, RandomStream& rng,
                                        const energy::KeyMask& mask);

/// Single-flip Metropolis chain on the binary energy with a geometric
/// temperature ladder; latent units are resampled from their tempered
/// conditionals after every sweep. Returns the lowest-energy visited state.
energy::StructureState anneal_negative(const Tensor& h, const Tensor& coupling,
                                       const energy::EnergyParams& params,
                                       const NegativeSamplerConfig& cfg, RandomStream& rng,
                                       const energy::KeyMask& mask);

}  // namespace boltzgate::sampler
