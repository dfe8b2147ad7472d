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

#include "boltzgate/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "boltzgate/numerics.hpp"
#include "boltzgate/ops.hpp"

namespace boltzgate::energy {
namespace {

void check_mask(const KeyMask& mask, std::size_t keys, const char* what) {
  if (mask.size() != keys) {
    throw ShapeError(std::string(what) + ": mask length " + std::to_string(mask.size()) +
                     " does not match " + std::to_string(keys) + " keys");
  }
}

}  // namespace

KeyMask all_valid(std::size_t keys) { return KeyMask(keys, 1.0); }

EnergyParams make_energy_params(std::size_t heads, std::size_t head_dim, std::size_t keys,
                                std::size_t latents, double c_lat) {
  return EnergyParams{Tensor({heads, head_dim}), Tensor({heads, keys, latents}),
                      Tensor({heads, latents}), c_lat};
}

EnergyVars bind(Tape& tape, const EnergyParams& params, bool trainable) {
  auto leaf = [&](const Tensor& t) { return trainable ? tape.variable(t) : tape.constant(t); };
  return EnergyVars{leaf(params.w_diag), leaf(params.w_lat), leaf(params.b_lat),
                    leaf(Tensor::scalar(params.c_lat))};
}

Var bias_field(Var queries, Var keys, const KeyMask& mask) {
  if (queries.value().rank() != 3 || keys.value().rank() != 3 ||
      queries.shape()[0] != keys.shape()[0] || queries.shape()[2] != keys.shape()[2]) {
    throw ShapeError("bias_field: incompatible queries " + shape_to_string(queries.shape()) +
                     " and keys " + shape_to_string(keys.shape()));
  }
  const std::size_t heads = queries.shape()[0], t = queries.shape()[1];
  const std::size_t s = keys.shape()[1], d = keys.shape()[2];
  if (d == 0) throw ShapeError("bias_field: head dimension must be positive");
  check_mask(mask, s, "bias_field");
  Var scores = ops::scale(ops::bmm(queries, keys, false, true), 1.0 / std::sqrt(double(d)));
  bool any_masked = false;
  for (double m : mask) any_masked = any_masked || m == 0.0;
  if (!any_masked) return scores;
  Tensor keep({heads, t, s});
  Tensor offset({heads, t, s});
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const bool valid = mask[i % s] != 0.0;
    keep[i] = valid ? 1.0 : 0.0;
    offset[i] = valid ? 0.0 : kNegMask;
  }
  return ops::add_const(ops::mul_const(scores, keep), offset);
}

Tensor bias_field(const Tensor& queries, const Tensor& keys, const KeyMask& mask) {
  Tape tape;
  return bias_field(tape.constant(queries), tape.constant(keys), mask).value();
}

Var pair_coupling(Var keys, Var w_diag, const KeyMask& mask) {
  if (keys.value().rank() != 3 || w_diag.value().rank() != 2 ||
      w_diag.shape()[0] != keys.shape()[0] || w_diag.shape()[1] != keys.shape()[2]) {
    throw ShapeError("pair_coupling: incompatible keys " + shape_to_string(keys.shape()) +
                     " and w_diag " + shape_to_string(w_diag.shape()));
  }
  const std::size_t heads = keys.shape()[0], n = keys.shape()[1], d = keys.shape()[2];
  check_mask(mask, n, "pair_coupling");
  const double inv_d = 1.0 / static_cast<double>(d);
  const Tensor& k = keys.value();
  const Tensor& w = w_diag.value();
  Tensor out({heads, n, n});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t a = 0; a < n; ++a) {
      if (mask[a] == 0.0) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (mask[b] == 0.0) continue;
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += w.at(h, c) * k.at(h, a, c) * k.at(h, b, c);
        acc *= inv_d;
        out.at(h, a, b) = acc;
        out.at(h, b, a) = acc;
      }
    }
  }
  return keys.tape().record(
      std::move(out), {keys, w_diag},
      [keys, w_diag, mask, heads, n, d, inv_d](Tape& tape, const Tensor& g) {
        Tensor* gk = tape.grad_target(keys);
        Tensor* gw = tape.grad_target(w_diag);
        const Tensor& k = keys.value();
        const Tensor& w = w_diag.value();
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t a = 0; a < n; ++a) {
            if (mask[a] == 0.0) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
              if (mask[b] == 0.0) continue;
              const double up = (g.at(h, a, b) + g.at(h, b, a)) * inv_d;
              if (up == 0.0) continue;
              for (std::size_t c = 0; c < d; ++c) {
                if (gk) {
                  gk->at(h, a, c) += up * w.at(h, c) * k.at(h, b, c);
                  gk->at(h, b, c) += up * w.at(h, c) * k.at(h, a, c);
                }
                if (gw) gw->at(h, c) += up * k.at(h, a, c) * k.at(h, b, c);
              }
            }
          }
        }
      });
}

Tensor pair_coupling(const Tensor& keys, const Tensor& w_diag, const KeyMask& mask) {
  Tape tape;
  return pair_coupling(tape.constant(keys), tape.constant(w_diag), mask).value();
}

void require_symmetric(const Tensor& coupling) {
  if (coupling.rank() != 3 || coupling.dim(1) != coupling.dim(2)) {
    throw ShapeError("coupling must be [H x S x S], got " + shape_to_string(coupling.shape()));
  }
  const std::size_t heads = coupling.dim(0), n = coupling.dim(1);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (coupling.at(h, a, b) != coupling.at(h, b, a))
          throw std::invalid_argument("coupling must be symmetric");
}

Var energy_bias(Var h, Var z) { return ops::neg(ops::sum(ops::mul(h, z))); }

Var energy_pair(Var coupling, Var z) {
  require_symmetric(coupling.value());
  if (z.value().rank() != 3 || z.shape()[0] != coupling.shape()[0] ||
      z.shape()[2] != coupling.shape()[1]) {
    throw ShapeError("energy_pair: gates " + shape_to_string(z.shape()) +
                     " incompatible with coupling " + shape_to_string(coupling.shape()));
  }
  // Zero diagonal turns z^T J z into the sum over s != s'.
  Var jz = ops::bmm(z, coupling);
  return ops::scale(ops::sum(ops::mul(z, jz)), -0.5);
}

Var energy_latent(const EnergyVars& params, Var z, Var u) {
  Var field = ops::add_batch_bias(ops::bmm(z, params.w_lat), params.b_lat);
  return ops::neg(ops::scale_by(ops::sum(ops::mul(u, field)), params.c_lat));
}

Var total_energy(Var h, Var coupling, const EnergyVars& params, Var z, Var u) {
  return ops::add(ops::add(energy_bias(h, z), energy_pair(coupling, z)),
                  energy_latent(params, z, u));
}

double energy_bias(const Tensor& h, const Tensor& z) {
  Tape tape;
  return energy_bias(tape.constant(h), tape.constant(z)).item();
}

double energy_pair(const Tensor& coupling, const Tensor& z) {
  Tape tape;
  return energy_pair(tape.constant(coupling), tape.constant(z)).item();
}

double energy_latent(const EnergyParams& params, const Tensor& z, const Tensor& u) {
  Tape tape;
  return energy_latent(bind(tape, params), tape.constant(z), tape.constant(u)).item();
}

double total_energy(const Tensor& h, const Tensor& coupling, const EnergyParams& params,
                    const Tensor& z, const Tensor& u) {
  Tape tape;
  return total_energy(tape.constant(h), tape.constant(coupling), bind(tape, params),
                      tape.constant(z), tape.constant(u))
      .item();
}

double expected_energy(const Tensor& h, const Tensor& coupling, const EnergyParams& params,
                       const StructureState& q) {
  return total_energy(h, coupling, params, q.s, q.r);
}

double entropy(const StructureState& q, const KeyMask& mask) {
  const std::size_t keys = q.s.dim(2);
  check_mask(mask, keys, "entropy");
  double total = 0.0;
  for (std::size_t i = 0; i < q.s.size(); ++i) {
    if (mask[i % keys] == 0.0) continue;
    total += bernoulli_entropy(clamp_probability(q.s[i]));
  }
  for (double r : q.r.data()) total += bernoulli_entropy(clamp_probability(r));
  return total;
}

double free_energy(const Tensor& h, const Tensor& coupling, const EnergyParams& params,
                   const StructureState& q, const KeyMask& mask) {
  return expected_energy(h, coupling, params, q) - entropy(q, mask);
}

}  // namespace boltzgate::energy
