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

#include "boltzgate/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "boltzgate/numerics.hpp"
#include "boltzgate/ops.hpp"

namespace boltzgate::meanfield {
namespace {

Tensor key_keep(const Shape& shape, const energy::KeyMask& mask) {
  const std::size_t keys = shape.back();
  if (mask.size() != keys) throw ShapeError("mean-field: mask length does not match keys");
  Tensor keep(shape);
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = mask[i % keys] != 0.0 ? 1.0 : 0.0;
  return keep;
}

bool any_masked(const energy::KeyMask& mask) {
  return std::any_of(mask.begin(), mask.end(), [](double m) { return m == 0.0; });
}

Var apply_mask(Var s, const energy::KeyMask& mask) {
  if (!any_masked(mask)) return s;
  return ops::mul_const(s, key_keep(s.shape(), mask));
}

Var clamp_prob(Var p) { return ops::clamp(p, kProbEps, 1.0 - kProbEps); }

double max_change(const Tensor& a, const Tensor& b) { return max_abs_diff(a, b); }

// A damped step moves (1 - damping) of the way to the undamped target.
double undamped_change(const Tensor& next, const Tensor& prev, double damping) {
  const double step = max_change(next, prev);
  return damping < 1.0 ? step / (1.0 - damping) : step;
}

}  // namespace

void SolverConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("solver iterations must be >= 1");
  if (!(damping >= 0.0 && damping <= 1.0))
    throw std::invalid_argument("solver damping must lie in [0, 1]");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("solver tolerance must be >= 0");
}

Var init_s(Var h, const energy::KeyMask& mask) {
  return apply_mask(clamp_prob(ops::sigmoid(h)), mask);
}

Var update_r(Var s, const energy::EnergyVars& params) {
  Var field = ops::add_batch_bias(ops::bmm(s, params.w_lat), params.b_lat);
  return clamp_prob(ops::sigmoid(ops::scale_by(field, params.c_lat)));
}

Var update_s(Var s_prev, Var r, Var h, Var coupling, const energy::EnergyVars& params,
             double damping, const energy::KeyMask& mask) {
  Var field = ops::add(h, ops::bmm(s_prev, coupling));
  Var latent = ops::scale_by(ops::bmm(r, params.w_lat, false, true), params.c_lat);
  Var candidate = clamp_prob(ops::sigmoid(ops::add(field, latent)));
  Var next = damping == 0.0
                 ? candidate
                 : ops::add(ops::scale(s_prev, damping), ops::scale(candidate, 1.0 - damping));
  return apply_mask(next, mask);
}

SolveResult solve(Var h, Var coupling, const energy::EnergyVars& params, const SolverConfig& cfg,
                  const energy::KeyMask& mask) {
  cfg.validate();
  if (cfg.mode != UpdateMode::kParallel) {
    throw std::invalid_argument("differentiable solve supports parallel updates only");
  }
  SolveResult out;
  std::optional<energy::EnergyParams> values;
  if (cfg.trace_free_energy) {
    values = energy::EnergyParams{params.w_diag.value(), params.w_lat.value(),
                                  params.b_lat.value(), params.c_lat.item()};
  }
  Var s = init_s(h, mask);
  for (int k = 0; k < cfg.iterations; ++k) {
    Var r = update_r(s, params);
    Var next = update_s(s, r, h, coupling, params, cfg.damping, mask);
    out.trace.residual = undamped_change(next.value(), s.value(), cfg.damping);
    ++out.trace.sweeps;
    s = next;
    if (values) {
      const energy::StructureState q{s.value(), update_r(s, params).value()};
      out.trace.free_energy_per_sweep.push_back(
          energy::free_energy(h.value(), coupling.value(), *values, q, mask));
    }
  }
  out.s = s;
  out.r = update_r(s, params);
  return out;
}

Solution solve(const Tensor& h, const Tensor& coupling, const energy::EnergyParams& params,
               const SolverConfig& cfg, const energy::KeyMask& mask,
               const FreeEnergyObserver& observer) {
  cfg.validate();
  energy::require_symmetric(coupling);
  Tape tape;
  const energy::EnergyVars vars = energy::bind(tape, params);
  Var hv = tape.constant(h);
  Var jv = tape.constant(coupling);

  Solution out;
  auto record = [&](const energy::StructureState& q) {
    if (!cfg.trace_free_energy) return;
    out.trace.free_energy_per_sweep.push_back(energy::free_energy(h, coupling, params, q, mask));
  };

  if (cfg.mode == UpdateMode::kParallel) {
    Var s = init_s(hv, mask);
    for (int k = 0; k < cfg.iterations; ++k) {
      Var r = update_r(s, vars);
      Var next = update_s(s, r, hv, jv, vars, cfg.damping, mask);
      out.trace.residual = undamped_change(next.value(), s.value(), cfg.damping);
      ++out.trace.sweeps;
      s = next;
      const energy::StructureState q{s.value(), update_r(s, vars).value()};
      record(q);
      if (observer) observer(energy::free_energy(h, coupling, params, q, mask));
      if (cfg.early_exit && out.trace.residual <= cfg.tolerance) break;
    }
    out.state = energy::StructureState{s.value(), update_r(s, vars).value()};
    return out;
  }

  // Sequential coordinate ascent: the latent block first (its units are
  // conditionally independent given s), then each edge in index order with
  // the freshest neighbours. Every step minimises F exactly in its block.
  const std::size_t heads = h.dim(0), rows = h.dim(1), keys = h.dim(2);
  const std::size_t latents = params.latents();
  const double c = params.c_lat;
  energy::StructureState q{init_s(hv, mask).value(), Tensor({heads, rows, latents})};
  auto notify = [&] {
    if (observer) observer(energy::free_energy(h, coupling, params, q, mask));
  };
  auto update_latents = [&] {
    for (std::size_t hd = 0; hd < heads; ++hd) {
      for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t m = 0; m < latents; ++m) {
          double field = params.b_lat.at(hd, m);
          for (std::size_t s = 0; s < keys; ++s) field += params.w_lat.at(hd, s, m) * q.s.at(hd, t, s);
          q.r.at(hd, t, m) = clamp_probability(sigmoid(c * field));
        }
      }
    }
    notify();
  };
  for (int k = 0; k < cfg.iterations; ++k) {
    const Tensor before = q.s;
    update_latents();
    for (std::size_t hd = 0; hd < heads; ++hd) {
      for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t s = 0; s < keys; ++s) {
          if (mask[s] == 0.0) continue;
          double field = h.at(hd, t, s);
          for (std::size_t o = 0; o < keys; ++o) field += coupling.at(hd, s, o) * q.s.at(hd, t, o);
          double latent = 0.0;
          for (std::size_t m = 0; m < latents; ++m) latent += params.w_lat.at(hd, s, m) * q.r.at(hd, t, m);
          q.s.at(hd, t, s) = clamp_probability(sigmoid(field + c * latent));
          notify();
        }
      }
    }
    out.trace.residual = max_change(q.s, before);
    ++out.trace.sweeps;
    record(q);
    if (cfg.early_exit && out.trace.residual <= cfg.tolerance) break;
  }
  update_latents();
  out.state = q;
  return out;
}

double fixed_point_residual(const Tensor& h, const Tensor& coupling,
                            const energy::EnergyParams& params, const Tensor& s,
                            const energy::KeyMask& mask) {
  Tape tape;
  const energy::EnergyVars vars = energy::bind(tape, params);
  Var sv = tape.constant(s);
  Var r = update_r(sv, vars);
  Var next = update_s(sv, r, tape.constant(h), tape.constant(coupling), vars, 0.0, mask);
  return max_change(next.value(), s);
}

}  // namespace boltzgate::meanfield
