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

#include "boltzgate/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "boltzgate/numerics.hpp"

namespace boltzgate::oracle {
namespace {

void validate(const TinyInstance& inst) {
  const std::size_t s = inst.edges(), m = inst.latents();
  if (s + m > kMaxEnumerableVariables) {
    throw std::invalid_argument("instance too large to enumerate");
  }
  if (inst.coupling.shape() != Shape{s, s}) {
    throw ShapeError("coupling must be [S x S], got " + shape_to_string(inst.coupling.shape()));
  }
  if (inst.w.shape() != Shape{s, m}) {
    throw ShapeError("latent couplings must be [S x M], got " +
                     shape_to_string(inst.w.shape()));
  }
  for (std::size_t a = 0; a < s; ++a) {
    if (inst.coupling.at(a, a) != 0.0) throw std::invalid_argument("coupling diagonal must be zero");
    for (std::size_t b = a + 1; b < s; ++b)
      if (inst.coupling.at(a, b) != inst.coupling.at(b, a))
        throw std::invalid_argument("coupling must be symmetric");
  }
}

}  // namespace

TinyInstance zero_instance(std::size_t edges, std::size_t latents) {
  return TinyInstance{std::vector<double>(edges, 0.0), Tensor({edges, edges}),
                      Tensor({edges, latents}), std::vector<double>(latents, 0.0), 0.5};
}

TinyInstance random_instance(RandomStream& rng, std::size_t edges, std::size_t latents,
                             double scale, double coupling_scale, double latent_scale,
                             double c_lat) {
  auto draw = [&](double r) { return r * (2.0 * rng.uniform() - 1.0); };
  TinyInstance inst = zero_instance(edges, latents);
  inst.c_lat = c_lat;
  for (auto& v : inst.h) v = draw(scale);
  for (std::size_t a = 0; a < edges; ++a)
    for (std::size_t b = a + 1; b < edges; ++b) {
      const double j = draw(coupling_scale);
      inst.coupling.at(a, b) = j;
      inst.coupling.at(b, a) = j;
    }
  for (auto& v : inst.w.data()) v = draw(latent_scale);
  for (auto& v : inst.b) v = draw(scale);
  return inst;
}

double state_energy(const TinyInstance& inst, std::uint64_t state) {
  const std::size_t s = inst.edges(), m = inst.latents();
  auto z = [&](std::size_t i) { return (state >> i) & 1U; };
  auto u = [&](std::size_t j) { return (state >> (s + j)) & 1U; };
  double e = 0.0;
  for (std::size_t a = 0; a < s; ++a) {
    if (!z(a)) continue;
    e -= inst.h[a];
    // Each unordered pair once; equals 1/2 of the ordered double sum.
    for (std::size_t b = a + 1; b < s; ++b)
      if (z(b)) e -= inst.coupling.at(a, b);
  }
  double latent = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!u(j)) continue;
    latent += inst.b[j];
    for (std::size_t a = 0; a < s; ++a)
      if (z(a)) latent += inst.w.at(a, j);
  }
  return e - inst.c_lat * latent;
}

ExactPosterior enumerate(const TinyInstance& inst) {
  validate(inst);
  const std::size_t s = inst.edges(), m = inst.latents();
  const std::uint64_t states = std::uint64_t{1} << (s + m);
  std::vector<double> neg_energy(states);
  for (std::uint64_t k = 0; k < states; ++k) neg_energy[k] = -state_energy(inst, k);

  ExactPosterior post;
  post.log_partition = logsumexp(neg_energy);
  post.probabilities.resize(states);
  post.marginals_z.assign(s, 0.0);
  post.marginals_u.assign(m, 0.0);
  for (std::uint64_t k = 0; k < states; ++k) {
    const double p = std::exp(neg_energy[k] - post.log_partition);
    post.probabilities[k] = p;
    for (std::size_t a = 0; a < s; ++a)
      if ((k >> a) & 1U) post.marginals_z[a] += p;
    for (std::size_t j = 0; j < m; ++j)
      if ((k >> (s + j)) & 1U) post.marginals_u[j] += p;
  }
  for (auto& v : post.marginals_z) v = std::clamp(v, 0.0, 1.0);
  for (auto& v : post.marginals_u) v = std::clamp(v, 0.0, 1.0);
  return post;
}

double exact_min_free_energy(const TinyInstance& inst) { return -enumerate(inst).log_partition; }

double exact_gate_probability(const TinyInstance& inst, std::size_t edge) {
  if (edge >= inst.edges()) {
    throw std::out_of_range("edge index " + std::to_string(edge) + " out of range for " +
                            std::to_string(inst.edges()) + " edges");
  }
  return enumerate(inst).marginals_z[edge];
}

double ground_state_energy(const TinyInstance& inst) {
  validate(inst);
  const std::uint64_t states = std::uint64_t{1} << (inst.edges() + inst.latents());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < states; ++k) best = std::min(best, state_energy(inst, k));
  return best;
}

LiftedInstance lift(const TinyInstance& inst) {
  validate(inst);
  const std::size_t s = inst.edges(), m = inst.latents();
  LiftedInstance out;
  out.h = Tensor({1, 1, s}, inst.h);
  out.coupling = inst.coupling.reshaped({1, s, s});
  out.params = energy::make_energy_params(1, 1, s, m, inst.c_lat);
  out.params.w_lat = inst.w.reshaped({1, s, m});
  out.params.b_lat = Tensor({1, m}, inst.b);
  out.mask = energy::all_valid(s);
  return out;
}

}  // namespace boltzgate::oracle
